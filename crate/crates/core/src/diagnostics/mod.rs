//! Energy functionals, conservation monitors, time-series output and rate
//! fits for runs of the [`crate::solver`].

mod asymptotic;
mod bisection;
mod energy;
mod fit;
mod report;

pub use asymptotic::{asymptotic_density, AsymptoticDensity};
pub use bisection::{find_threshold_by_bisection, linear_growth_rate, BisectionConfig, BisectionResult, GrowthProbe};
pub use energy::{
    compatibility_residuals, energy_e, energy_el, linear_energy, CompatibilityReport, LinearEnergy,
};
pub use fit::{fit_rate, RateFit, RateModel, Series};
pub use report::{
    energy_report, energy_report_for, read_timeseries, EnergyReport, TimeseriesWriter, CSV_COLUMNS,
    TRUSTED_NZ,
};
