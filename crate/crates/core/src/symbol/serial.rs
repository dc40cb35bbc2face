use super::space::{Field, Layout, SymbolSpace};
use super::{ClassicalSymbol, Term};
use crate::cutoff::{CutoffSpec, Profile};
use crate::error::{CalcError, Result};
use crate::numerics::C64;
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CutoffDoc {
    r0: f64,
    r1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ComponentDoc {
    degree: C64,
    /// `[points, sphere nodes, rank, rank]`
    grid_shape: Vec<usize>,
    data: String,
    level: usize,
    profile: Profile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SymbolDoc {
    order: C64,
    p: usize,
    q: usize,
    rank: usize,
    cutoff: CutoffDoc,
    components: Vec<ComponentDoc>,
    layout: Layout,
    depth: usize,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    circle_nodes: usize,
}

fn encode(data: &[C64]) -> String {
    let mut bytes = Vec::with_capacity(data.len() * 16);
    for v in data {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

fn decode(s: &str) -> Result<Vec<C64>> {
    let bytes = STANDARD.decode(s).map_err(|e| CalcError::Serialization(format!("components.data: {e}")))?;
    if bytes.len() % 16 != 0 {
        return Err(CalcError::Serialization("components.data: length is not a multiple of 16 bytes".into()));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect())
}

pub fn symbol_to_json(s: &ClassicalSymbol) -> Result<String> {
    let sp = &s.space;
    let doc = SymbolDoc {
        order: s.order,
        p: sp.p,
        q: sp.q,
        rank: sp.rank,
        cutoff: CutoffDoc { r0: sp.cutoff.r0, r1: sp.cutoff.r1 },
        components: s
            .terms
            .iter()
            .map(|t| ComponentDoc {
                degree: t.field.degree,
                grid_shape: vec![sp.points(), sp.nodes(), sp.rank, sp.rank],
                data: encode(&t.field.data),
                level: t.level,
                profile: t.profile.clone(),
            })
            .collect(),
        layout: sp.layout,
        depth: s.depth,
        nx: sp.nx,
        ny: sp.ny,
        lx: sp.lx,
        ly: sp.ly,
        circle_nodes: if sp.q == 2 { sp.nodes() } else { 0 },
    };
    serde_json::to_string_pretty(&doc).map_err(|e| CalcError::Serialization(e.to_string()))
}

pub fn symbol_from_json(text: &str) -> Result<ClassicalSymbol> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SymbolDoc = serde_path_to_error::deserialize(de)
        .map_err(|e| CalcError::Serialization(format!("{}: {}", e.path(), e.inner())))?;
    let cutoff = CutoffSpec::new(doc.cutoff.r0, doc.cutoff.r1)?;
    let space = Arc::new(SymbolSpace::with_sphere(
        doc.layout,
        doc.p,
        doc.q,
        doc.rank,
        doc.nx,
        doc.ny,
        doc.lx,
        doc.ly,
        doc.circle_nodes.max(3),
        cutoff,
    )?);
    let expected = vec![space.points(), space.nodes(), space.rank, space.rank];
    let mut terms = Vec::with_capacity(doc.components.len());
    for (i, c) in doc.components.into_iter().enumerate() {
        if c.grid_shape != expected {
            return Err(CalcError::Serialization(format!(
                "components[{i}].grid_shape: {:?} does not match {:?}",
                c.grid_shape, expected
            )));
        }
        let data = decode(&c.data)?;
        if data.len() != space.field_len() {
            return Err(CalcError::Serialization(format!("components[{i}].data: wrong sample count {}", data.len())));
        }
        terms.push(Term { level: c.level, profile: c.profile, field: Field { degree: c.degree, data } });
    }
    ClassicalSymbol::from_terms(space, doc.order, doc.depth, terms)
}
