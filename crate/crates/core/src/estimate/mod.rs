//! Analysis pipeline: spectral estimation, fits, calibration and occupancy
//! inference from measured (or simulated) records.

mod calibration;
mod lm;
mod lorentzian;
mod occupancy;
mod report;
mod ringdown_fit;
mod welch;

pub use calibration::{
    aod_calibration, aod_calibration_fit, coherent_average, thermal_reference_calibration, tone_amplitude, AodLinearFit,
    AodPoint, CalibrationFactor, CalibrationMethod, MIN_PEAK_TO_FLOOR,
};
pub use lm::{digamma, levenberg_marquardt, log_periodogram_bias, LmOptions, LmSolution};
pub use lorentzian::{
    fit_lorentzian, infer_inertia, mode_temperature, plate_inertia, LorentzianFit, LorentzianOptions, DEFAULT_EXCLUSION_RBW,
    PLATE_DENSITY,
};
pub use occupancy::{occupancy_from_data, OccupancyFromData, MISMATCH_RMS_AVERAGED, MISMATCH_RMS_EXACT};
pub use report::FitReport;
pub use ringdown_fit::{fit_ringdown, RingdownFit, RingdownOptions};
pub use welch::{coherence, welch_psd, WelchParams, Window};
