//! Executable checks of the scheme's theoretical properties over recorded runs.

mod comparison;
mod contour;
mod estimates;
mod geometry;
mod suite;

use std::fmt;

pub use comparison::{
    check_comparison_suite, check_gmm_ordering, check_winterbottom_containment, check_wulff_avoidance, BallSide,
    ComparisonSuite,
};
pub use contour::{densify, hausdorff, point_segment_distance, Contour, Point};
pub use estimates::{
    check_coercivity, check_density_estimates, check_holder, check_linf_displacement, check_volume_distance,
    DensityOptions,
};
pub use geometry::{check_consistency, check_euler_lagrange, ConsistencySample};
pub use suite::{run_checks, run_flows, ALL_CHECKS};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        })
    }
}

/// A measured quantity and, when it is tested, its threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub status: Status,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
    /// Steps or cells that violated the check.
    pub offenders: Vec<String>,
}

impl CheckReport {
    pub fn new(name: &str) -> Self {
        Self { name: name.into(), status: Status::Pass, measurements: Vec::new(), notes: Vec::new(), offenders: Vec::new() }
    }

    pub fn skipped(name: &str, why: impl Into<String>) -> Self {
        let mut r = Self::new(name);
        r.status = Status::Skipped;
        r.notes.push(why.into());
        r
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn measure(&mut self, name: &str, value: f64, threshold: Option<f64>) {
        self.measurements.push(Measurement { name: name.into(), value, threshold });
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn fail(&mut self, offender: impl Into<String>) {
        self.status = Status::Fail;
        self.offenders.push(offender.into());
    }

    /// CSV rows `check,status,metric,value,threshold`.
    pub fn csv_rows(&self) -> Vec<String> {
        if self.measurements.is_empty() {
            return vec![format!("{},{},,,", self.name, self.status)];
        }
        self.measurements
            .iter()
            .map(|m| {
                let t = m.threshold.map(|t| t.to_string()).unwrap_or_default();
                format!("{},{},{},{},{}", self.name, self.status, m.name, m.value, t)
            })
            .collect()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.status, self.name)?;
        for m in &self.measurements {
            match m.threshold {
                Some(t) => write!(f, "; {} = {:.6} (threshold {:.6})", m.name, m.value, t)?,
                None => write!(f, "; {} = {:.6}", m.name, m.value)?,
            }
        }
        for n in &self.notes {
            write!(f, "; {n}")?;
        }
        if !self.offenders.is_empty() {
            let shown: Vec<&str> = self.offenders.iter().take(5).map(String::as_str).collect();
            write!(f, "; offenders: {}", shown.join(", "))?;
            if self.offenders.len() > 5 {
                write!(f, " (+{} more)", self.offenders.len() - 5)?;
            }
        }
        Ok(())
    }
}

/// Header of the verification CSV.
pub const REPORT_HEADER: &str = "check,status,metric,value,threshold";
