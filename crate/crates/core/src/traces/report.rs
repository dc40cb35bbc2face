//! JSON and flat CSV export of pole tables, heat fits and spectra.

use super::heat::HeatExpansion;
use super::zeta::PoleRecord;
use crate::error::{CalcError, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatSummary {
    pub exponents: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub fit_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceReport {
    pub poles: Vec<PoleRecord>,
    pub heat: Option<HeatSummary>,
    pub spectrum: Vec<i64>,
}

impl TraceReport {
    /// Poles sorted by location (real part, then imaginary part).
    pub fn new(mut poles: Vec<PoleRecord>, heat: Option<&HeatExpansion>, spectrum: Vec<i64>) -> Self {
        poles.sort_by(|a, b| a.z_re.total_cmp(&b.z_re).then(a.z_im.total_cmp(&b.z_im)));
        let heat = heat.map(|h| HeatSummary { exponents: h.exponents.clone(), coefficients: h.coefficients.clone(), fit_error: h.fit_error });
        TraceReport { poles, heat, spectrum }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| CalcError::Serialization(e.to_string()))
    }

    /// One row per pole, heat term and spectrum entry.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,index,z_re,z_im,residue_re,residue_im,uncertainty,simple,exponent,coefficient\n");
        for (i, p) in self.poles.iter().enumerate() {
            let _ = writeln!(
                s,
                "pole,{i},{},{},{},{},{},{},,",
                p.z_re, p.z_im, p.residue_re, p.residue_im, p.uncertainty, p.simple
            );
        }
        if let Some(h) = &self.heat {
            for (i, (e, c)) in h.exponents.iter().zip(&h.coefficients).enumerate() {
                let _ = writeln!(s, "heat,{i},,,,,{},,{e},{c}", h.fit_error);
            }
        }
        for (i, v) in self.spectrum.iter().enumerate() {
            let _ = writeln!(s, "spectrum,{i},{v},0,,,,,,");
        }
        s
    }
}

/// Full pole table including ladder index, detection flag and residue trace.
pub fn poles_csv(poles: &[PoleRecord]) -> String {
    let mut s = String::from("k,admissible,detected,z_re,z_im,residue_re,residue_im,uncertainty,simple,tau_re,tau_im\n");
    for p in poles {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.k, p.admissible, p.detected, p.z_re, p.z_im, p.residue_re, p.residue_im, p.uncertainty, p.simple, p.tau_re, p.tau_im
        );
    }
    s
}
