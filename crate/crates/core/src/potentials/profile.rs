use std::path::Path;

use crate::error::{ensure, Error, Result};

/// A nonnegative radial profile with compact support, shared by the two-body
/// potential (argument `r = |x|`) and the m-radial three-body potential
/// (argument: the hyperradius `s`).
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `amplitude` on `[0, radius]`, zero beyond.
    SoftSphere { amplitude: f64, radius: f64 },
    /// `amplitude * exp(-r^2 / (2 width^2))` on `[0, radius]`, zero beyond.
    TruncatedGaussian { amplitude: f64, width: f64, radius: f64 },
    /// Linear interpolation of samples; zero beyond the last radius.
    Tabulated(Table),
}

/// Samples `(radius, value)` on a strictly increasing grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure(radii.len() == values.len(), || {
            format!("{} radii but {} values", radii.len(), values.len())
        })?;
        ensure(radii.len() >= 2, || "table needs at least two rows".into())?;
        ensure(radii[0] == 0.0, || {
            format!("table must start at radius 0, got {}", radii[0])
        })?;
        for w in radii.windows(2) {
            ensure(w[1] > w[0] && w[1].is_finite(), || {
                format!("radii must be strictly increasing ({} then {})", w[0], w[1])
            })?;
        }
        for &v in &values {
            ensure(v.is_finite() && v >= 0.0, || {
                format!("table values must be finite and nonnegative, got {v}")
            })?;
        }
        Ok(Self { radii, values })
    }

    /// Reads whitespace-separated `radius value` rows; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace().map(str::parse::<f64>);
            match (cols.next(), cols.next(), cols.next()) {
                (Some(Ok(r)), Some(Ok(v)), None) => {
                    radii.push(r);
                    values.push(v);
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "line {}: expected two numeric columns",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(radii, values)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn value(&self, r: f64) -> f64 {
        let last = *self.radii.last().unwrap();
        if r > last {
            return 0.0;
        }
        let k = self.radii.partition_point(|&x| x <= r);
        if k == self.radii.len() {
            return *self.values.last().unwrap();
        }
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        let t = (r - r0) / (r1 - r0);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }
}

impl Profile {
    pub fn soft_sphere(amplitude: f64, radius: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_length("radius", radius)?;
        Ok(Profile::SoftSphere { amplitude, radius })
    }

    pub fn truncated_gaussian(amplitude: f64, width: f64, radius: f64) -> Result<Self> {
        check_amplitude(amplitude)?;
        check_length("width", width)?;
        check_length("radius", radius)?;
        Ok(Profile::TruncatedGaussian {
            amplitude,
            width,
            radius,
        })
    }

    /// Value at a nonnegative argument. Callers guarantee `r >= 0`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Profile::SoftSphere { amplitude, radius } => {
                if r <= *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            Profile::TruncatedGaussian {
                amplitude,
                width,
                radius,
            } => {
                if r <= *radius {
                    amplitude * (-0.5 * (r / width).powi(2)).exp()
                } else {
                    0.0
                }
            }
            Profile::Tabulated(t) => t.value(r),
        }
    }

    pub fn support_radius(&self) -> f64 {
        match self {
            Profile::SoftSphere { radius, .. } | Profile::TruncatedGaussian { radius, .. } => *radius,
            Profile::Tabulated(t) => *t.radii.last().unwrap(),
        }
    }

    /// True when the profile vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            Profile::SoftSphere { amplitude, .. } | Profile::TruncatedGaussian { amplitude, .. } => *amplitude == 0.0,
            Profile::Tabulated(t) => t.values.iter().all(|&v| v == 0.0),
        }
    }

    /// Radii where the profile may have a kink or a jump, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Tabulated(t) => t.radii[1..].to_vec(),
            _ => vec![self.support_radius()],
        }
    }

    /// `lambda^-2 * p(r / lambda)`.
    pub fn rescale(&self, lambda: f64) -> Result<Self> {
        ensure(lambda > 0.0 && lambda.is_finite(), || {
            format!("scale factor must be positive, got {lambda}")
        })?;
        let k = lambda.powi(-2);
        Ok(match self {
            Profile::SoftSphere { amplitude, radius } => Profile::SoftSphere {
                amplitude: amplitude * k,
                radius: radius * lambda,
            },
            Profile::TruncatedGaussian {
                amplitude,
                width,
                radius,
            } => Profile::TruncatedGaussian {
                amplitude: amplitude * k,
                width: width * lambda,
                radius: radius * lambda,
            },
            Profile::Tabulated(t) => Profile::Tabulated(Table {
                radii: t.radii.iter().map(|r| r * lambda).collect(),
                values: t.values.iter().map(|v| v * k).collect(),
            }),
        })
    }
}

fn check_amplitude(v: f64) -> Result<()> {
    ensure(v.is_finite() && v >= 0.0, || {
        format!("amplitude must be finite and nonnegative, got {v}")
    })
}

fn check_length(name: &str, v: f64) -> Result<()> {
    ensure(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"))
}
