use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Filters, kernel length and stride of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub const fn new(filters: usize, kernel: usize, stride: usize) -> Self {
        Self {
            filters,
            kernel,
            stride,
        }
    }
}

/// Architecture of the frame classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub num_mics: usize,
    pub frame_len: usize,
    pub conv1: ConvSpec,
    /// One entry per residual block; both convolutions of a block share the
    /// filter count and kernel, the first one applies the stride.
    pub residual_blocks: Vec<ConvSpec>,
    pub fc1_units: usize,
    /// Direction classes plus one silence class.
    pub num_classes: usize,
    pub dropout_keep: f32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_mics: 8,
            frame_len: 480,
            conv1: ConvSpec::new(32, 7, 2),
            residual_blocks: vec![ConvSpec::new(32, 3, 2), ConvSpec::new(32, 3, 2)],
            fc1_units: 128,
            num_classes: 20,
            dropout_keep: 0.5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_mics == 0 || self.frame_len == 0 {
            return bad("input must have at least one channel and one sample".into());
        }
        for (name, spec) in std::iter::once(("conv1".to_string(), &self.conv1)).chain(
            self.residual_blocks
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("block{i}"), s)),
        ) {
            if spec.filters == 0 || spec.stride == 0 {
                return bad(format!("{name}: filters and stride must be positive"));
            }
            if spec.kernel % 2 == 0 {
                return bad(format!("{name}: kernel length {} must be odd", spec.kernel));
            }
        }
        if self.fc1_units == 0 {
            return bad("fc1 needs at least one unit".into());
        }
        if self.num_classes < 2 {
            return bad("need at least two classes".into());
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return bad(format!("dropout keep {} not in (0, 1]", self.dropout_keep));
        }
        Ok(())
    }

    /// Channels and length of the feature map entering the dense layers.
    pub fn feature_shape(&self) -> (usize, usize) {
        let mut len = self.frame_len.div_ceil(self.conv1.stride);
        let mut ch = self.conv1.filters;
        for b in &self.residual_blocks {
            len = len.div_ceil(b.stride);
            ch = b.filters;
        }
        (ch, len)
    }

    pub fn flat_features(&self) -> usize {
        let (c, l) = self.feature_shape();
        c * l
    }
}

fn spec_str(s: &ConvSpec) -> String {
    format!("{},{},{}", s.filters, s.kernel, s.stride)
}

fn parse_spec(s: &str) -> Result<ConvSpec> {
    let parts: Vec<&str> = s.split(',').collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bad convolution spec `{s}`")))?;
    match nums[..] {
        [filters, kernel, stride] => Ok(ConvSpec::new(filters, kernel, stride)),
        _ => Err(Error::Config(format!("bad convolution spec `{s}`"))),
    }
}

/// Single-line `key=value` form used in checkpoint headers.
impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self.residual_blocks.iter().map(spec_str).collect();
        write!(
            f,
            "num_mics={} frame_len={} conv1={} blocks={} fc1={} classes={} keep={}",
            self.num_mics,
            self.frame_len,
            spec_str(&self.conv1),
            if blocks.is_empty() {
                "none".to_string()
            } else {
                blocks.join(";")
            },
            self.fc1_units,
            self.num_classes,
            self.dropout_keep
        )
    }
}

impl FromStr for ModelConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = ModelConfig::default();
        let mut seen = 0;
        for field in s.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad config field `{field}`")))?;
            let num = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad value for {key}: `{v}`")))
            };
            match key {
                "num_mics" => cfg.num_mics = num(value)?,
                "frame_len" => cfg.frame_len = num(value)?,
                "conv1" => cfg.conv1 = parse_spec(value)?,
                "blocks" => {
                    cfg.residual_blocks = if value == "none" {
                        Vec::new()
                    } else {
                        value.split(';').map(parse_spec).collect::<Result<_>>()?
                    }
                }
                "fc1" => cfg.fc1_units = num(value)?,
                "classes" => cfg.num_classes = num(value)?,
                "keep" => {
                    cfg.dropout_keep = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad dropout keep `{value}`")))?
                }
                other => return Err(Error::Config(format!("unknown config key `{other}`"))),
            }
            seen += 1;
        }
        if seen != 7 {
            return Err(Error::Config(format!("config line has {seen} of 7 fields")));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_feature_shape() {
        let cfg = ModelConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.feature_shape(), (32, 60));
        assert_eq!(cfg.flat_features(), 1920);
    }

    #[test]
    fn text_roundtrip() {
        let cfg = ModelConfig {
            residual_blocks: vec![ConvSpec::new(16, 5, 3)],
            dropout_keep: 0.75,
            ..Default::default()
        };
        assert_eq!(cfg.to_string().parse::<ModelConfig>().unwrap(), cfg);
        let none = ModelConfig {
            residual_blocks: vec![],
            ..Default::default()
        };
        assert_eq!(none.to_string().parse::<ModelConfig>().unwrap(), none);
    }

    #[test]
    fn rejects_even_kernels() {
        let cfg = ModelConfig {
            conv1: ConvSpec::new(8, 4, 1),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!("num_mics=8".parse::<ModelConfig>().is_err());
    }
}
