use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use foveacodec::codec::{encode_sequence, EncoderConfig, FrameGuide, QuantSchedule};
use foveacodec::foveation::{foveation_map, CsfParams, DisplayGeometry, Gaze, LevelMap};
use foveacodec::video::{read_y4m, write_y4m, Frame, FramePlane, FrameRate, VideoSequence};
use foveacodec_cli::*;
use tempfile::TempDir;

fn texture(x: i64, y: i64) -> u8 {
    let (x, y) = (x as f64, y as f64);
    let v = 128.0 + 50.0 * (x * 0.21).sin() * (y * 0.17).cos() + 30.0 * ((x + 2.0 * y) * 0.05).sin()
        + 25.0 * ((x * 0.9).sin() * (y * 1.3).sin());
    v.round().clamp(0.0, 255.0) as u8
}

fn clip(w: usize, h: usize, frames: usize) -> VideoSequence {
    let f = (0..frames as i64)
        .map(|t| Frame::from_luma(FramePlane::from_fn(w, h, |x, y| texture(x as i64 - 3 * t, y as i64 - t)).unwrap()).unwrap())
        .collect();
    VideoSequence::new(f, FrameRate::new(24, 1).unwrap()).unwrap()
}

fn write_clip(dir: &Path, name: &str, seq: &VideoSequence) -> PathBuf {
    let p = dir.join(name);
    let mut buf = Vec::new();
    write_y4m(seq, &mut buf).unwrap();
    fs::write(&p, buf).unwrap();
    p
}

fn setup(w: usize, h: usize, frames: usize) -> (TempDir, PathBuf, VideoSequence) {
    let dir = TempDir::new().unwrap();
    let seq = clip(w, h, frames);
    let p = write_clip(dir.path(), "in.y4m", &seq);
    (dir, p, seq)
}

#[test]
fn default_encode_decodes_to_the_recon_chain() {
    let (dir, input, seq) = setup(48, 40, 7);
    let out = dir.path().join("a.fmvc");
    let s = cmd_encode(&input, &out, &EncodeConfig::default()).unwrap();
    assert_eq!(s.frames, 7);
    assert_eq!(s.frame_bits.len(), 7);
    assert_eq!(s.bytes_written as u64, fs::metadata(&out).unwrap().len());

    let geom = DisplayGeometry::<f64>::with_defaults(48, 40).unwrap();
    let map = foveation_map(&geom, Gaze::center(48, 40), &CsfParams::default()).unwrap();
    let guides = vec![FrameGuide::from_map(&map, LevelMap::DEFAULT_LEVELS, 0).unwrap(); 7];
    let enc = encode_sequence(&seq, &guides, &QuantSchedule::default(), &EncoderConfig::default(), 0.02, 0.012).unwrap();
    assert_eq!(fs::read(&out).unwrap(), enc.bitstream.to_bytes());

    let y4m = dir.path().join("a.y4m");
    let d = cmd_decode(&out, &y4m).unwrap();
    assert_eq!(d.frames, 7);
    let back = read_y4m(&fs::read(&y4m).unwrap()[..]).unwrap();
    assert!(back.frames().iter().eq(enc.recons()));
    assert_eq!(back.frame_rate, seq.frame_rate);
}

#[test]
fn wider_map_costs_more() {
    let (dir, input, _) = setup(64, 48, 3);
    let bpp = |f: &str| {
        let cfg = EncodeConfig {
            fmsc: f.parse().unwrap(),
            ..EncodeConfig::default()
        };
        cmd_encode(&input, &dir.path().join("x.fmvc"), &cfg).unwrap().bpp
    };
    assert!(bpp("H/2") > bpp("H/6"));
    assert!(bpp("40") > bpp("10"));
}

#[test]
fn short_gaze_track_is_a_config_error_without_output() {
    let (dir, input, _) = setup(32, 32, 3);
    let track = dir.path().join("gaze.csv");
    fs::write(&track, "frame_idx,x,y\n0,5,6\n1,7,8\n").unwrap();
    let out = dir.path().join("o.fmvc");
    let mut cfg = EncodeConfig {
        gaze: GazeSource::Track(track),
        ..EncodeConfig::default()
    };
    let err = cmd_encode(&input, &out, &cfg).unwrap_err();
    assert!(matches!(err, CliError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());

    cfg.hold_gaze = true;
    cmd_encode(&input, &out, &cfg).unwrap();
    let bits = load_fmvc(&out).unwrap();
    let gazes: Vec<_> = bits.frames.iter().map(|f| f.gaze).collect();
    assert_eq!(gazes, vec![Gaze::new(5, 6), Gaze::new(7, 8), Gaze::new(7, 8)]);
}

#[test]
fn gaze_track_rules() {
    let p = Path::new("t.csv");
    let t = read_gaze_track(&b""[..], p, 4, 640, 480).unwrap();
    assert_eq!(t.gazes, vec![Gaze::new(320, 240); 4]);
    assert_eq!(t.covered, 0);

    let t = read_gaze_track(&b"0,100,100\n"[..], p, 3, 640, 480).unwrap();
    assert_eq!(t.gazes, vec![Gaze::new(100, 100); 3]);
    assert_eq!(t.covered, 1);

    let t = read_gaze_track(&b"# eye tracker\n0, 5000, -3\n"[..], p, 1, 1920, 1080).unwrap();
    assert_eq!(t.gazes, vec![Gaze::new(1919, 0)]);

    let t = read_gaze_track(&b"1,10,10\n3,20,20\n9,0,0\n"[..], p, 5, 64, 64).unwrap();
    let c = Gaze::new(32, 32);
    let (a, b) = (Gaze::new(10, 10), Gaze::new(20, 20));
    assert_eq!(t.gazes, vec![c, a, a, b, b]);
    assert_eq!(t.covered, 4);

    match read_gaze_track(&b"frame_idx,x,y\n0,1,2\n1,abc,2\n"[..], p, 2, 8, 8) {
        Err(CliError::GazeParse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        read_gaze_track(&b"2,1,1\n1,1,1\n"[..], p, 4, 8, 8),
        Err(CliError::GazeParse { line: 2, .. })
    ));
    assert!(matches!(
        read_gaze_track(&b"0,1\n"[..], p, 4, 8, 8),
        Err(CliError::GazeParse { line: 1, .. })
    ));
}

#[test]
fn corrupt_streams_fail_with_bitstream_codes() {
    let (dir, input, _) = setup(16, 16, 2);
    let good = dir.path().join("g.fmvc");
    cmd_encode(&input, &good, &EncodeConfig::default()).unwrap();
    let bytes = fs::read(&good).unwrap();

    let bad = dir.path().join("bad.fmvc");
    let mut b = bytes.clone();
    b[1] = b'?';
    fs::write(&bad, &b).unwrap();
    let err = cmd_decode(&bad, &dir.path().join("o.y4m")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("byte 0"), "{err}");

    let mut b = bytes.clone();
    b[4] = 2;
    fs::write(&bad, &b).unwrap();
    let err = cmd_decode(&bad, &dir.path().join("o.y4m")).unwrap_err();
    assert!(matches!(err, CliError::Input { source: foveacodec::Error::UnsupportedVersion(2), .. }));
    assert_eq!(err.exit_code(), 3);

    let err = cmd_decode(&dir.path().join("missing.fmvc"), &dir.path().join("o.y4m")).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn fmsc_parsing() {
    assert_eq!("H/4".parse::<Fmsc>().unwrap(), Fmsc::Divisor(4));
    assert_eq!("12.5".parse::<Fmsc>().unwrap(), Fmsc::Pixels(12.5));
    assert_eq!("csf".parse::<Fmsc>().unwrap(), Fmsc::Csf);
    for bad in ["H/0", "H/x", "-3", "0", "nan", ""] {
        assert!(bad.parse::<Fmsc>().is_err(), "{bad}");
    }
    assert_eq!(Fmsc::Divisor(4).pixels(288), Some(72.0));
    assert_eq!(Fmsc::Divisor(300).code(), 0);
}

#[test]
fn default_sweep_is_ordered_and_reproducible() {
    let (dir, input, _) = setup(96, 80, 4);
    let set: Vec<Fmsc> = DEFAULT_SWEEP.iter().map(|&k| Fmsc::Divisor(k)).collect();
    let out = dir.path().join("rd.csv");
    let rows = cmd_rd_sweep(&input, &out, &set, &EncodeConfig::default()).unwrap();
    assert_eq!(rows.len(), 6);
    for w in rows.windows(2) {
        assert!(w[1].fmsc > w[0].fmsc);
        assert!(w[1].bpp > w[0].bpp, "{rows:?}");
        assert!(w[1].fw_ssim >= w[0].fw_ssim - 0.002, "{rows:?}");
    }
    for r in &rows {
        for v in [r.mean_ssim, r.fw_ssim, r.fwqi_approx] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
    let first = fs::read_to_string(&out).unwrap();
    assert!(first.starts_with("fmsc,bpp,mean_ssim,fw_ssim,fwqi_approx\n8.000,"));
    assert_eq!(first.lines().count(), 7);
    cmd_rd_sweep(&input, &out, &set, &EncodeConfig::default()).unwrap();
    assert_eq!(fs::read_to_string(&out).unwrap(), first);

    assert!(cmd_rd_sweep(&input, &out, &[], &EncodeConfig::default()).is_err());
}

#[test]
fn metrics_on_identical_and_coded_clips() {
    let (dir, input, _) = setup(32, 32, 2);
    let mut csv = Vec::new();
    let rows = cmd_metrics(&input, &input, None, &EncodeConfig::default(), &mut csv).unwrap();
    assert!(rows.iter().all(|r| (r.mean_ssim - 1.0).abs() < 1e-9 && (r.fwqi_approx - 1.0).abs() < 1e-9));
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("# "));
    assert_eq!(text.lines().nth(1), Some("frame_idx,bpp,mean_ssim,fw_ssim,fwqi_approx"));

    let coded = dir.path().join("c.fmvc");
    let cfg = EncodeConfig {
        fmsc: Fmsc::Divisor(6),
        ..EncodeConfig::default()
    };
    let s = cmd_encode(&input, &coded, &cfg).unwrap();
    let rows = cmd_metrics(&input, &coded, None, &EncodeConfig::default(), Vec::new()).unwrap();
    assert!(rows.iter().all(|r| r.mean_ssim < 1.0 && r.bpp > 0.0));
    let total: f64 = rows.iter().map(|r| r.bpp).sum::<f64>() / rows.len() as f64;
    assert!((total - s.bpp).abs() < 1e-12);

    let other = write_clip(dir.path(), "small.y4m", &clip(16, 16, 2));
    assert_eq!(cmd_metrics(&input, &other, None, &EncodeConfig::default(), Vec::new()).unwrap_err().exit_code(), 2);
}

#[test]
fn map_export_is_pgm() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m.pgm");
    cmd_map(20, 10, Gaze::new(3, 4), Fmsc::Csf, false, &EncodeConfig::default(), &out).unwrap();
    let data = fs::read(&out).unwrap();
    assert!(data.starts_with(b"P5\n20 10\n255\n"));
    assert_eq!(data.len(), b"P5\n20 10\n255\n".len() + 200);
    cmd_map(20, 10, Gaze::new(3, 4), Fmsc::Divisor(4), true, &EncodeConfig::default(), &out).unwrap();
    assert!(cmd_map(20, 10, Gaze::new(30, 4), Fmsc::Csf, false, &EncodeConfig::default(), &out).is_err());
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_foveacodec");
    let (dir, input, _) = setup(24, 16, 2);
    let out = dir.path().join("b.fmvc");
    let run = |args: &[&str]| Command::new(exe).args(args).output().unwrap();

    let ok = run(&["encode", "--input", input.to_str().unwrap(), "--output", out.to_str().unwrap(), "--fmsc", "H/4"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("frame 1:"));

    let bad_cfg = run(&["encode", "--input", input.to_str().unwrap(), "--output", out.to_str().unwrap(), "--qbase", "0"]);
    assert_eq!(bad_cfg.status.code(), Some(2));

    let garbage = dir.path().join("g.fmvc");
    fs::write(&garbage, b"nope").unwrap();
    let bad_bits = run(&["decode", "--input", garbage.to_str().unwrap(), "--output", "/dev/null"]);
    assert_eq!(bad_bits.status.code(), Some(3));

    let missing = run(&["decode", "--input", dir.path().join("none").to_str().unwrap(), "--output", "/dev/null"]);
    assert_eq!(missing.status.code(), Some(4));

    let metrics = run(&["metrics", "--ref", input.to_str().unwrap(), "--test", out.to_str().unwrap()]);
    assert!(metrics.status.success());
    assert_eq!(String::from_utf8_lossy(&metrics.stdout).lines().count(), 4);
}
