use core::fmt;

/// Errors produced by the normalization pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An image was constructed with zero width or height.
    EmptyImage,
    /// Data length does not match `width * height`.
    LengthMismatch { expected: usize, actual: usize },
    /// A pixel value was negative or not finite.
    InvalidPixel { index: usize, value: f64 },
    /// Two images or masks that must share dimensions do not.
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    /// A numeric parameter is outside its valid range.
    InvalidParameter(&'static str),
    /// The factorization input matrix is all zeros.
    ZeroMatrix,
    /// Not enough valid pixels to compute statistics.
    TooFewValidPixels { required: usize, actual: usize },
    /// Too few samples for a statistic.
    TooFewSamples { required: usize, actual: usize },
    /// The regularization reference value is zero.
    BlankImage,
    /// Sensor wavelengths are not strictly decreasing (R > G > B > 0).
    InvalidSensor,
    /// The guided filter window does not fit inside the image.
    RadiusTooLarge {
        radius: usize,
        width: usize,
        height: usize,
    },
    /// The Poisson solver did not reach the residual target.
    NotConverged { iterations: usize, residual: f64 },
    /// Scene regions leave a pixel uncovered.
    UncoveredPixel { x: usize, y: usize },
    /// Histograms of different kinds were compared.
    FeatureKindMismatch,
    /// A gallery for identification had no entries.
    EmptyGallery,
    /// The image is smaller than the operator's footprint.
    ImageTooSmall {
        min: usize,
        width: usize,
        height: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyImage => write!(f, "image has zero width or height"),
            Error::LengthMismatch { expected, actual } => {
                write!(f, "expected {expected} pixels, got {actual}")
            }
            Error::InvalidPixel { index, value } => {
                write!(f, "pixel {index} holds invalid value {value}")
            }
            Error::DimensionMismatch { expected, actual } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, actual.0, actual.1
            ),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::ZeroMatrix => write!(f, "input matrix is all zeros"),
            Error::TooFewValidPixels { required, actual } => {
                write!(f, "need at least {required} valid pixels, found {actual}")
            }
            Error::TooFewSamples { required, actual } => {
                write!(f, "need at least {required} samples, found {actual}")
            }
            Error::BlankImage => write!(f, "reference intensity is zero (blank image)"),
            Error::InvalidSensor => {
                write!(f, "sensor wavelengths must satisfy l1 > l2 > l3 > 0")
            }
            Error::RadiusTooLarge {
                radius,
                width,
                height,
            } => write!(f, "radius {radius} does not fit a {width}x{height} image"),
            Error::NotConverged {
                iterations,
                residual,
            } => write!(
                f,
                "solver stopped after {iterations} iterations at relative residual {residual:e}"
            ),
            Error::UncoveredPixel { x, y } => {
                write!(f, "pixel ({x}, {y}) is not covered by any region")
            }
            Error::FeatureKindMismatch => write!(f, "histogram kinds differ"),
            Error::EmptyGallery => write!(f, "gallery is empty"),
            Error::ImageTooSmall { min, width, height } => {
                write!(f, "{width}x{height} image is smaller than {min}x{min}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
