//! Bundled answer keys. `DAGGER_DATA_DIR` points at a directory holding
//! replacement copies of the JSON files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact_quat::{Algebra, OrthogonalInvolution, QuatAlgebra, Quaternion, Rational};
use crate::lattice_orders::{order_from_strings, Order, SubLattice3};

const TABLE3_JSON: &str = include_str!("../data/table3_orders.json");

pub const DATA_DIR_ENV: &str = "DAGGER_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraRecord {
    pub a: String,
    pub b: String,
}

/// One order of the answer key, with the involution conjugation by `ij`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub algebra: AlgebraRecord,
    pub disc_h: i64,
    pub disc_inv: i64,
    pub basis: Vec<String>,
    pub tables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plus_part: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
}

impl OrderRecord {
    pub fn algebra(&self) -> Result<Algebra> {
        let p = |s: &str| s.parse::<Rational>().map_err(|_| Error::Parse(s.to_string()));
        QuatAlgebra::new(p(&self.algebra.a)?, p(&self.algebra.b)?)
    }

    pub fn order(&self) -> Result<Order> {
        let alg = self.algebra()?;
        let b: Vec<&str> = self.basis.iter().map(String::as_str).collect();
        order_from_strings(&alg, &b)
    }

    pub fn involution(&self) -> Result<OrthogonalInvolution> {
        Ok(OrthogonalInvolution::standard(&self.algebra()?))
    }

    pub fn in_table(&self, t: &str) -> bool {
        self.tables.iter().any(|x| x == t)
    }

    pub fn listed_plus_part(&self) -> Result<Option<SubLattice3>> {
        let Some(p) = &self.plus_part else { return Ok(None) };
        let alg = self.algebra()?;
        let g: Result<Vec<Quaternion>> = p.iter().map(|s| Quaternion::parse(&alg, s)).collect();
        SubLattice3::from_generators(&alg, &g?).map(Some)
    }

    pub fn listed_hole(&self) -> Result<Option<Quaternion>> {
        self.hole.as_deref().map(|h| Quaternion::parse(&self.algebra()?, h)).transpose()
    }

    pub fn listed_rho(&self) -> Result<Option<Rational>> {
        self.rho
            .as_deref()
            .map(|r| r.parse::<Rational>().map_err(|_| Error::Parse(r.to_string())))
            .transpose()
    }
}

#[derive(Deserialize)]
struct Table3File {
    orders: Vec<OrderRecord>,
}

pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

pub fn parse_table3(text: &str) -> Result<Vec<OrderRecord>> {
    let f: Table3File = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(f.orders)
}

/// The bundled answer key, or the override from `DAGGER_DATA_DIR`.
pub fn table3_orders() -> Result<Vec<OrderRecord>> {
    match data_dir() {
        Some(d) => {
            let p = d.join("table3_orders.json");
            let text = std::fs::read_to_string(&p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            parse_table3(&text)
        }
        None => bundled_table3(),
    }
}

pub fn bundled_table3() -> Result<Vec<OrderRecord>> {
    parse_table3(TABLE3_JSON)
}
