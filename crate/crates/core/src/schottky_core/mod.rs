//! Schottky parameters, the free group Γ and Möbius plumbing.

mod group;
mod mobius;
mod params;
pub mod paramfile;

pub use group::{enumerate_group, word_count, Group, GroupWord};
pub use mobius::{Image, MobiusMap, Point};
pub use paramfile::{format_json, format_key_value, parse_params, read_params};
pub use params::{
    index_position, signed_indices, ClassicalHandle, ClassicalParams, Handle, PairMargin, SchottkyParams,
    TruncationPolicy, ValidityReport,
};

use crate::error::Result;

pub fn params_from_classical(cp: &ClassicalParams) -> Result<SchottkyParams> {
    cp.to_schottky()
}

pub fn classical_from_params(sp: &SchottkyParams) -> Result<ClassicalParams> {
    sp.to_classical()
}

pub fn generator_map(sp: &SchottkyParams, a: i32) -> MobiusMap {
    sp.generator_map(a)
}

pub fn apply_mobius(m: &MobiusMap, z: Point) -> Point {
    m.apply(z)
}

pub fn validate(sp: &SchottkyParams) -> ValidityReport {
    sp.validate()
}

pub fn mobius_act_on_params(sp: &SchottkyParams, m: &MobiusMap) -> Result<SchottkyParams> {
    sp.mobius_act(m)
}

pub fn in_fundamental_domain(sp: &SchottkyParams, z: Point) -> bool {
    sp.in_fundamental_domain(z)
}
