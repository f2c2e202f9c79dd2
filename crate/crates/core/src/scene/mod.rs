//! Everything between the Bragg expectation and the stored 8-bit image:
//! background scattering, detector point spread and the noisy readout.

mod background;
mod psf;
mod readout;

pub use background::{
    background_expectation, BackgroundComponent, BackgroundConfig, REFERENCE_FLUENCE,
};
pub use psf::{apply_psf, gaussian_kernel};
pub use readout::{compress_sqrt, detector_readout, Detector, DetectorNoiseModel};
