use super::grid::{GridOperator, ModeSet};
use super::ModelFoliation;
use crate::error::{CalcError, Result};
use crate::numerics::{C64, ZERO};
use crate::symbol::{quantize_full, FullSymbol, PhasePoint};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum OperatorKind {
    /// `-sum d^2/dy_j^2`
    TransverseLaplacian,
    /// `d_H + delta_H` on transverse forms, symbol `sum eta_j (e_j + i_j)`
    TransverseSignature,
    /// `-i d/dy` for `q = 1`; `sigma_1 D_1 + sigma_2 D_2` for `q = 2`
    FirstOrderDirac,
    /// `-i d/dx_1` along the leaves
    LeafwiseDirac,
    /// `(1 + amplitude cos(2 pi x_1 / Lx)) (-i d/dy_1)`
    ModulatedDirac { amplitude: f64 },
}

#[derive(Debug, Clone)]
pub struct ModelOperator {
    pub kind: OperatorKind,
    pub matrix: GridOperator,
    pub symbol: FullSymbol,
}

/// Exterior plus interior multiplication by `e_j` on `Lambda^* R^q`
/// (basis indexed by bitmasks).
pub fn clifford_generator(q: usize, j: usize) -> Vec<C64> {
    let d = 1 << q;
    let mut m = vec![ZERO; d * d];
    for set in 0..d {
        let below = (set & ((1 << j) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
        let target = set ^ (1 << j);
        // exterior when j is absent, interior when present
        m[target * d + set] = C64::new(sign, 0.0);
    }
    m
}

fn signature_symbol(q: usize, eta: &[f64]) -> Vec<C64> {
    let d = 1 << q;
    let mut out = vec![ZERO; d * d];
    for (j, e) in eta.iter().enumerate() {
        for (o, g) in out.iter_mut().zip(clifford_generator(q, j)) {
            *o += g * *e;
        }
    }
    out
}

fn pauli(eta: &[f64]) -> Vec<C64> {
    vec![ZERO, C64::new(eta[0], -eta[1]), C64::new(eta[0], eta[1]), ZERO]
}

pub fn model_operator(model: &ModelFoliation, kind: &OperatorKind, modes: &Arc<ModeSet>) -> Result<ModelOperator> {
    let (p, q) = (model.p, model.q);
    let (symbol, label): (FullSymbol, &str) = match kind {
        OperatorKind::TransverseLaplacian => (
            FullSymbol {
                order: 2.0,
                p,
                q,
                rank: 1,
                components: vec![Arc::new(|pt: &PhasePoint| vec![C64::new(pt.eta.iter().map(|e| e * e).sum(), 0.0)])],
                differential: true,
            },
            "transverse Laplacian",
        ),
        OperatorKind::TransverseSignature => (
            FullSymbol {
                order: 1.0,
                p,
                q,
                rank: 1 << q,
                components: vec![Arc::new(move |pt: &PhasePoint| signature_symbol(q, &pt.eta))],
                differential: true,
            },
            "transverse signature operator",
        ),
        OperatorKind::FirstOrderDirac => {
            let rank = if q == 1 { 1 } else { 2 };
            let f: Arc<dyn Fn(&PhasePoint) -> Vec<C64> + Send + Sync> = if q == 1 {
                Arc::new(|pt: &PhasePoint| vec![C64::new(pt.eta[0], 0.0)])
            } else {
                Arc::new(|pt: &PhasePoint| pauli(&pt.eta))
            };
            (FullSymbol { order: 1.0, p, q, rank, components: vec![f], differential: true }, "transverse Dirac operator")
        }
        OperatorKind::LeafwiseDirac => (
            FullSymbol {
                order: 1.0,
                p,
                q,
                rank: 1,
                components: vec![Arc::new(|pt: &PhasePoint| vec![C64::new(pt.xi[0], 0.0)])],
                differential: true,
            },
            "leafwise Dirac operator",
        ),
        OperatorKind::ModulatedDirac { amplitude } => {
            let lx = match model.kind {
                super::ModelKind::Product { lx, .. } => lx,
                _ => return Err(CalcError::InvalidModel("the modulated operator needs a product model".into())),
            };
            let a = *amplitude;
            (
                FullSymbol {
                    order: 1.0,
                    p,
                    q,
                    rank: 1,
                    components: vec![Arc::new(move |pt: &PhasePoint| {
                        vec![C64::new((1.0 + a * (2.0 * PI * pt.x[0] / lx).cos()) * pt.eta[0], 0.0)]
                    })],
                    differential: true,
                },
                "modulated transverse Dirac operator",
            )
        }
    };
    let matrix = match kind {
        OperatorKind::ModulatedDirac { .. } => quantize_full(&symbol, model, modes, 5, 1)?,
        _ => {
            let r = symbol.rank;
            let s = symbol.clone();
            GridOperator::mode_diagonal(
                Arc::clone(modes),
                r,
                |m| s.eval(&PhasePoint { x: vec![0.0; p], y: vec![0.0; q], xi: m.xi.clone(), eta: m.eta.clone() }),
                label,
            )
        }
    };
    let mut matrix = matrix.symmetrized()?;
    matrix.label = label.to_string();
    Ok(ModelOperator { kind: kind.clone(), matrix, symbol })
}
