use super::PointLightFrame;
use crate::error::{Error, Result};

/// Display rate used when none is configured.
pub const DEFAULT_FPS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedFrame<'a> {
    pub time_s: f64,
    pub frame: &'a PointLightFrame,
}

/// Endless looping stream resampled by nearest-sample selection.
#[derive(Debug, Clone)]
pub struct FrameStream<'a> {
    frames: &'a [PointLightFrame],
    source_rate_hz: f64,
    fps: f64,
    k: u64,
}

impl<'a> Iterator for FrameStream<'a> {
    type Item = TimedFrame<'a>;

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.frames.len() as u64;
        let src = (self.k as f64 * self.source_rate_hz / self.fps).round() as u64;
        let item = TimedFrame {
            time_s: self.k as f64 / self.fps,
            frame: &self.frames[(src % n) as usize],
        };
        self.k += 1;
        Some(item)
    }
}

pub fn animate(frames: &[PointLightFrame], source_rate_hz: f64, fps: f64) -> Result<FrameStream<'_>> {
    if frames.is_empty() {
        return Err(Error::EmptyFrames);
    }
    if !(fps > 0.0) || !(source_rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!("rates must be positive (fps {fps}, source {source_rate_hz})")));
    }
    Ok(FrameStream {
        frames,
        source_rate_hz,
        fps,
        k: 0,
    })
}

/// Source indices shown during one pass over `n` frames.
pub fn loop_indices(n: usize, source_rate_hz: f64, fps: f64) -> Vec<usize> {
    (0u64..)
        .map(|k| (k as f64 * source_rate_hz / fps).round() as usize)
        .take_while(|&i| i < n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize) -> Vec<PointLightFrame> {
        (0..n)
            .map(|i| PointLightFrame {
                frame_index: i,
                points: vec![[0.5, 0.5]; 15],
            })
            .collect()
    }

    fn indices(stream: FrameStream<'_>, k: usize) -> Vec<usize> {
        stream.take(k).map(|f| f.frame.frame_index).collect()
    }

    #[test]
    fn same_rate_is_identity_and_loops() {
        let f = frames(100);
        let idx = indices(animate(&f, 100.0, 100.0).unwrap(), 103);
        assert_eq!(&idx[..100], &(0..100).collect::<Vec<_>>()[..]);
        assert_eq!(&idx[100..], &[0, 1, 2]);
    }

    #[test]
    fn half_rate_takes_every_second_frame() {
        let f = frames(100);
        let idx = indices(animate(&f, 100.0, 50.0).unwrap(), 50);
        assert_eq!(idx, (0..50).map(|k| 2 * k).collect::<Vec<_>>());
    }

    #[test]
    fn sixty_fps_from_hundred_hz() {
        let f = frames(100);
        let idx = indices(animate(&f, 100.0, 60.0).unwrap(), 10);
        // round(k * 5 / 3) for k = 0..9, worked by hand
        assert_eq!(idx, vec![0, 2, 3, 5, 7, 8, 10, 12, 13, 15]);
    }

    #[test]
    fn empty_sequence_is_rejected() {
        assert!(matches!(animate(&[], 100.0, 50.0), Err(Error::EmptyFrames)));
    }

    #[test]
    fn loop_indices_cover_one_pass() {
        assert_eq!(loop_indices(10, 100.0, 50.0), vec![0, 2, 4, 6, 8]);
    }
}
