use std::io::{Read, Write};

use super::{PitchFrame, PitchIoError, PitchTrack, Result, DEFAULT_F0_BAND};

/// Hop assumed when a track has a single row and no hint: 256 samples at 44.1 kHz.
const FALLBACK_HOP_SEC: f64 = 256.0 / 44100.0;

/// Load a `time_sec,f0_hz[,confidence]` track using the default plausibility band.
pub fn load_pitch_csv<R: Read>(source: R, hop_hint_sec: Option<f64>) -> Result<PitchTrack> {
    load_pitch_csv_with_band(source, hop_hint_sec, DEFAULT_F0_BAND)
}

/// Load a pitch CSV as written by Sonic Annotator's pYIN plugin (or anything
/// with the same columns).
///
/// Missing rows stand for unvoiced regions. Gaps wider than 1.5 hops are
/// filled with unvoiced frames at hop spacing. Non-positive f0 values and
/// values outside `band` become unvoiced frames. A first line that starts
/// with `#`, or whose fields are all non-numeric, is treated as a header.
pub fn load_pitch_csv_with_band<R: Read>(source: R, hop_hint_sec: Option<f64>, band: (f64, f64)) -> Result<PitchTrack> {
    if let Some(h) = hop_hint_sec {
        if !(h.is_finite() && h > 0.0) {
            return Err(PitchIoError::Config(format!("hop hint must be positive, got {h}")));
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut rows: Vec<PitchFrame> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            PitchIoError::Parse { row, msg: e.to_string() }
        })?;
        let row = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            if record.iter().all(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        if record.len() < 2 || record.len() > 3 {
            return Err(PitchIoError::Parse { row, msg: format!("expected 2 or 3 fields, found {}", record.len()) });
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = &record[i];
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(PitchIoError::Parse { row, msg: format!("invalid {name} '{raw}'") }),
            }
        };
        let time = field(0, "time")?;
        let f0 = field(1, "f0")?;
        let confidence = if record.len() == 3 { field(2, "confidence")? } else { 1.0 };
        if time < 0.0 {
            return Err(PitchIoError::Parse { row, msg: format!("negative time {time}") });
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(PitchIoError::Parse { row, msg: format!("confidence {confidence} outside [0, 1]") });
        }
        if let Some(prev) = rows.last() {
            if time <= prev.time_sec {
                return Err(PitchIoError::Order { row, time });
            }
        }
        let frame = if f0 > 0.0 && f0 >= band.0 && f0 <= band.1 {
            PitchFrame::voiced(time, f0, confidence)
        } else {
            PitchFrame::unvoiced(time)
        };
        rows.push(frame);
    }

    if rows.is_empty() {
        return Err(PitchIoError::EmptyTrack);
    }

    let hop = hop_hint_sec.unwrap_or_else(|| median_gap(&rows).unwrap_or(FALLBACK_HOP_SEC));
    PitchTrack::new(fill_gaps(rows, hop), hop)
}

fn median_gap(rows: &[PitchFrame]) -> Option<f64> {
    let mut gaps: Vec<f64> = rows.windows(2).map(|w| w[1].time_sec - w[0].time_sec).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    Some(if gaps.len() % 2 == 1 { gaps[mid] } else { 0.5 * (gaps[mid - 1] + gaps[mid]) })
}

fn fill_gaps(rows: Vec<PitchFrame>, hop: f64) -> Vec<PitchFrame> {
    let mut out = Vec::with_capacity(rows.len());
    let mut iter = rows.into_iter().peekable();
    while let Some(frame) = iter.next() {
        out.push(frame);
        let Some(next) = iter.peek() else { break };
        let gap = next.time_sec - frame.time_sec;
        if gap > 1.5 * hop {
            let missing = (gap / hop).round() as usize;
            for k in 1..missing {
                let t = frame.time_sec + k as f64 * hop;
                if t < next.time_sec - 0.25 * hop {
                    out.push(PitchFrame::unvoiced(t));
                }
            }
        }
    }
    out
}

/// Write the voiced frames of a track as `time_sec,f0_hz,confidence` rows.
/// Unvoiced frames are omitted, matching the loader's convention.
pub fn write_pitch_csv<W: Write>(sink: W, track: &PitchTrack) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for f in track.voiced() {
        let f0 = f.f0_hz.expect("voiced");
        w.write_record([f.time_sec.to_string(), f0.to_string(), f.confidence.to_string()])
            .map_err(|e| PitchIoError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(text: &str) -> Result<PitchTrack> {
        load_pitch_csv(text.as_bytes(), None)
    }

    #[test]
    fn two_rows() {
        let t = load("0.000,220.0\n0.005,220.5\n").unwrap();
        assert_eq!(t.frames().len(), 2);
        assert!(t.frames().iter().all(PitchFrame::is_voiced));
        assert!((t.hop_sec() - 0.005).abs() < 1e-12);
        assert_eq!(t.frames()[1].confidence, 1.0);
    }

    #[test]
    fn materializes_gaps() {
        let t = load_pitch_csv("0.000,220\n1.000,220\n".as_bytes(), Some(0.005)).unwrap();
        let f = t.frames();
        assert_eq!(f.len(), 201);
        assert!(f[1..200].iter().all(|f| !f.is_voiced()));
        assert!((f[1].time_sec - 0.005).abs() < 1e-12);
        assert!((f[199].time_sec - 0.995).abs() < 1e-12);
    }

    #[test]
    fn gap_below_threshold_not_filled() {
        let t = load("0.0,220\n0.01,220\n0.02,220\n0.034,220\n").unwrap();
        assert_eq!(t.frames().len(), 4);
    }

    #[test]
    fn parse_error_names_row() {
        match load("abc,220\n") {
            Err(PitchIoError::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("{other:?}"),
        }
        match load("#time,f0\n0.0,220\n0.1,x\n") {
            Err(PitchIoError::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn headers_skipped() {
        assert_eq!(load("# pyin output\n0.0,220\n").unwrap().frames().len(), 1);
        assert_eq!(load("time,f0\n0.0,220\n0.1,221\n").unwrap().frames().len(), 2);
    }

    #[test]
    fn order_and_empty_errors() {
        assert!(matches!(load("0.1,220\n0.05,220\n"), Err(PitchIoError::Order { row: 2, .. })));
        assert!(matches!(load("0.1,220\n0.1,220\n"), Err(PitchIoError::Order { .. })));
        assert!(matches!(load(""), Err(PitchIoError::EmptyTrack)));
        assert!(matches!(load("time,f0\n"), Err(PitchIoError::EmptyTrack)));
    }

    #[test]
    fn implausible_and_negative_f0_unvoiced() {
        let t = load("0.0,-220\n0.01,30\n0.02,2000\n0.03,440,0.8\n").unwrap();
        let voiced: Vec<_> = t.voiced().collect();
        assert_eq!(voiced.len(), 1);
        assert_eq!(voiced[0].confidence, 0.8);
        assert_eq!(t.frames().len(), 4);
    }

    #[test]
    fn bad_confidence_rejected() {
        assert!(matches!(load("0.0,220,1.5\n"), Err(PitchIoError::Parse { .. })));
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            start in 0.0f64..10.0,
            steps in proptest::collection::vec((1u32..50, proptest::option::of(60.0f64..1500.0), 0.0f64..=1.0), 1..200)
        ) {
            let mut t = start;
            let mut frames = Vec::new();
            for (dt, f0, c) in steps {
                t += dt as f64 * 0.0058;
                frames.push(match f0 {
                    Some(f) => PitchFrame::voiced(t, f, c),
                    None => PitchFrame::unvoiced(t),
                });
            }
            let track = PitchTrack::new(frames, 0.0058).unwrap();
            prop_assume!(track.voiced().count() > 0);
            let mut buf = Vec::new();
            write_pitch_csv(&mut buf, &track).unwrap();
            let back = load_pitch_csv(buf.as_slice(), None).unwrap();
            let a: Vec<_> = track.voiced().collect();
            let b: Vec<_> = back.voiced().collect();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.time_sec - y.time_sec).abs() <= 1e-9);
                prop_assert!((x.f0_hz.unwrap() - y.f0_hz.unwrap()).abs() <= 1e-6);
            }
        }
    }
}
