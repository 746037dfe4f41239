use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::signal::MultichannelFrame;
#[cfg(doc)]
use crate::signal::FRAME_LEN;
use crate::wav::{dequantize, quantize};

/// Labelled frames stored as 16-bit PCM, channel-major within a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    num_mics: usize,
    frame_len: usize,
    sample_rate: f64,
    samples: Vec<i16>,
    classes: Vec<usize>,
}

impl FrameSet {
    pub fn new(num_mics: usize, frame_len: usize, sample_rate: f64) -> Self {
        Self {
            num_mics,
            frame_len,
            sample_rate,
            samples: Vec::new(),
            classes: Vec::new(),
        }
    }

    pub fn num_mics(&self) -> usize {
        self.num_mics
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    fn frame_size(&self) -> usize {
        self.num_mics * self.frame_len
    }

    /// Appends PCM samples of one frame.
    pub fn push_pcm(&mut self, pcm: &[i16], class: usize) -> Result<()> {
        if pcm.len() != self.frame_size() {
            return Err(Error::Dimension(format!(
                "frame has {} samples, expected {}",
                pcm.len(),
                self.frame_size()
            )));
        }
        self.samples.extend_from_slice(pcm);
        self.classes.push(class);
        Ok(())
    }

    /// Quantizes and appends a frame; returns the number of clipped samples.
    pub fn push_frame(&mut self, frame: &MultichannelFrame, class: usize) -> Result<usize> {
        if frame.num_channels() != self.num_mics {
            return Err(Error::Dimension(format!(
                "frame has {} channels, expected {}",
                frame.num_channels(),
                self.num_mics
            )));
        }
        let mut clipped = 0;
        let pcm: Vec<i16> = frame
            .samples()
            .iter()
            .map(|&x| {
                let (q, c) = quantize(x);
                clipped += c as usize;
                q
            })
            .collect();
        self.push_pcm(&pcm, class)?;
        Ok(clipped)
    }

    pub fn pcm(&self, index: usize) -> &[i16] {
        let n = self.frame_size();
        &self.samples[index * n..(index + 1) * n]
    }

    /// Frame `index` as audio; fails unless frames are [`FRAME_LEN`] long.
    pub fn frame(&self, index: usize) -> Result<MultichannelFrame> {
        let samples = self.pcm(index).iter().map(|&q| dequantize(q)).collect();
        MultichannelFrame::new(self.num_mics, samples, self.sample_rate)
    }

    /// `(len(indices), M, T)` input tensor.
    pub fn batch(&self, indices: &[usize]) -> Tensor {
        let n = self.frame_size();
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend(self.pcm(i).iter().map(|&q| dequantize(q)));
        }
        Tensor::from_vec(&[indices.len(), self.num_mics, self.frame_len], data)
            .expect("batch size matches shape")
    }

    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for &c in &self.classes {
            if c < num_classes {
                counts[c] += 1;
            }
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> FrameSet {
        let mut out = FrameSet::new(self.num_mics, self.frame_len, self.sample_rate);
        for &i in indices {
            out.samples.extend_from_slice(self.pcm(i));
            out.classes.push(self.classes[i]);
        }
        out
    }

    pub fn append(&mut self, other: &FrameSet) -> Result<()> {
        if other.num_mics != self.num_mics || other.frame_len != self.frame_len {
            return Err(Error::Dimension("frame sets differ in frame shape".into()));
        }
        self.samples.extend_from_slice(&other.samples);
        self.classes.extend_from_slice(&other.classes);
        Ok(())
    }
}
