use std::io::{Read, Write};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioBuffer, PitchIoError, Result};

fn map_hound(err: hound::Error) -> PitchIoError {
    match err {
        hound::Error::Unsupported => PitchIoError::Unsupported("non-PCM or unsupported WAV codec".into()),
        // hound reports short reads as `Other`
        hound::Error::IoError(e)
            if matches!(e.kind(), std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other) =>
        {
            PitchIoError::Format(format!("file ends before the declared data chunk ({e})"))
        }
        hound::Error::IoError(e) => PitchIoError::Io(e),
        hound::Error::FormatError(msg) => PitchIoError::Format(msg.to_string()),
        other => PitchIoError::Format(other.to_string()),
    }
}

/// Decode a PCM WAV stream (8/16/24/32-bit integer or 32-bit float) to mono.
///
/// Integer samples are divided by 2^(bits-1); channels are averaged.
pub fn load_wav<R: Read>(source: R) -> Result<AudioBuffer> {
    let reader = WavReader::new(source).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(PitchIoError::Format("zero channels".into()));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => {
            reader.into_samples::<f32>().collect::<std::result::Result<_, _>>().map_err(map_hound)?
        }
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound)?
        }
        (fmt, bits) => {
            return Err(PitchIoError::Unsupported(format!("{bits}-bit {fmt:?} samples")));
        }
    };

    if !interleaved.len().is_multiple_of(channels) {
        return Err(PitchIoError::Format("partial sample frame at end of data".into()));
    }
    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| (frame.iter().map(|&s| s as f64).sum::<f64>() / channels as f64) as f32)
            .collect()
    };
    AudioBuffer::new(spec.sample_rate, mono)
}

/// Write mono 16-bit PCM. Used by the corpus generator and tests.
pub fn write_wav_mono16<W: Write + std::io::Seek>(sink: W, audio: &AudioBuffer) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::new(sink, spec).map_err(map_hound)?;
    for &s in audio.samples() {
        let v = (s as f64 * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}
