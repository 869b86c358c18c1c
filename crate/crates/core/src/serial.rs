//! Versioned JSON documents for sections and coefficient fields, and
//! deterministic CSV export of grid samples.

use crate::error::{Error, Result};
use crate::fourier::{BoundarySection, CoefficientField, PolarGridFunction};
use crate::linalg::CVec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// `{m, K, components: [[re, im], ...]}` in mode order -K..K per component.
#[derive(Serialize, Deserialize)]
pub struct SectionDoc {
    pub format_version: u32,
    pub kind: String,
    pub m: usize,
    pub k_max: usize,
    pub components: Vec<Vec<[f64; 2]>>,
}

impl SectionDoc {
    pub fn from_section(s: &BoundarySection) -> Self {
        let m = s.m();
        let k = s.k_max() as i64;
        let components = (0..2 * m)
            .map(|c| {
                (-k..=k)
                    .map(|kk| {
                        let z = s.coeff(c, kk);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        SectionDoc {
            format_version: FORMAT_VERSION,
            kind: "boundary_section".into(),
            m,
            k_max: s.k_max(),
            components,
        }
    }

    pub fn to_section(&self) -> Result<BoundarySection> {
        if self.kind != "boundary_section" {
            return Err(Error::Serial(format!("unexpected kind {}", self.kind)));
        }
        let nm = 2 * self.k_max + 1;
        if self.components.len() != 2 * self.m
            || self.components.iter().any(|c| c.len() != nm)
        {
            return Err(Error::Serial("component shape mismatch".into()));
        }
        let dim = 2 * self.m * nm;
        let mut v = CVec::zeros(dim);
        for (c, comp) in self.components.iter().enumerate() {
            for (i, re_im) in comp.iter().enumerate() {
                v[i * 2 * self.m + c] = Complex64::new(re_im[0], re_im[1]);
            }
        }
        Ok(BoundarySection::from_vector(self.m, self.k_max, v))
    }
}

/// `entries[row][col]` holds the mode list of one matrix entry.
#[derive(Serialize, Deserialize)]
pub struct FieldDoc {
    pub format_version: u32,
    pub kind: String,
    pub m: usize,
    pub k_max: usize,
    pub entries: Vec<Vec<Vec<[f64; 2]>>>,
}

impl FieldDoc {
    pub fn from_field(f: &CoefficientField) -> Self {
        let m = f.m();
        let k = f.k_max() as i64;
        let entries = (0..2 * m)
            .map(|r| {
                (0..2 * m)
                    .map(|c| {
                        (-k..=k)
                            .map(|kk| {
                                let z = f.entry(r, c, kk);
                                [z.re, z.im]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        FieldDoc {
            format_version: FORMAT_VERSION,
            kind: "coefficient_field".into(),
            m,
            k_max: f.k_max(),
            entries,
        }
    }

    pub fn to_field(&self) -> Result<CoefficientField> {
        if self.kind != "coefficient_field" {
            return Err(Error::Serial(format!("unexpected kind {}", self.kind)));
        }
        let d = 2 * self.m;
        let nm = 2 * self.k_max + 1;
        if self.entries.len() != d
            || self
                .entries
                .iter()
                .any(|r| r.len() != d || r.iter().any(|c| c.len() != nm))
        {
            return Err(Error::Serial("entry shape mismatch".into()));
        }
        let mut f = CoefficientField::zero(self.m, self.k_max);
        for r in 0..d {
            for c in 0..d {
                for i in 0..nm {
                    let z = self.entries[r][c][i];
                    f.set_entry(r, c, i as i64 - self.k_max as i64, Complex64::new(z[0], z[1]));
                }
            }
        }
        Ok(f)
    }
}

/// Radially dependent coefficients: a boundary trace field plus
/// piecewise-constant-in-time samples.
#[derive(Serialize, Deserialize)]
pub struct RadialFieldDoc {
    pub format_version: u32,
    pub kind: String,
    pub boundary: FieldDoc,
    pub samples: Vec<RadialSampleDoc>,
}

#[derive(Serialize, Deserialize)]
pub struct RadialSampleDoc {
    pub t: f64,
    pub field: FieldDoc,
}

impl RadialFieldDoc {
    pub fn from_radial(a: &crate::coeff::RadialCoefficient) -> Self {
        RadialFieldDoc {
            format_version: FORMAT_VERSION,
            kind: "radial_coefficient".into(),
            boundary: FieldDoc::from_field(&a.boundary),
            samples: a
                .samples
                .iter()
                .map(|(t, f)| RadialSampleDoc {
                    t: *t,
                    field: FieldDoc::from_field(f),
                })
                .collect(),
        }
    }

    pub fn to_radial(&self) -> Result<crate::coeff::RadialCoefficient> {
        Ok(crate::coeff::RadialCoefficient {
            boundary: self.boundary.to_field()?,
            samples: self
                .samples
                .iter()
                .map(|s| Ok((s.t, s.field.to_field()?)))
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

/// Parse a coefficient file holding either a plain field or a radial one.
pub fn parse_coefficient_json(text: &str) -> Result<crate::coeff::RadialCoefficient> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    match v.get("kind").and_then(|k| k.as_str()) {
        Some("coefficient_field") => {
            let doc: FieldDoc = serde_json::from_value(v)?;
            Ok(crate::coeff::RadialCoefficient::radially_independent(
                doc.to_field()?,
            ))
        }
        Some("radial_coefficient") => {
            let doc: RadialFieldDoc = serde_json::from_value(v)?;
            doc.to_radial()
        }
        other => Err(Error::Serial(format!(
            "unknown coefficient document kind {other:?}"
        ))),
    }
}

fn fmt(x: f64) -> String {
    // 17 significant digits round-trip doubles exactly
    format!("{x:.16e}")
}

/// CSV of boundary grid samples: `theta,component,re,im` rows, preceded by a
/// comment line carrying the artifact version and config hash.
pub fn section_csv(s: &BoundarySection, gridsize: usize, config_hash: &str) -> Result<String> {
    let vals = s.synthesize(gridsize)?;
    let mut out = String::new();
    out.push_str(&format!(
        "# artifact_version={FORMAT_VERSION} config_hash={config_hash}\n"
    ));
    out.push_str("theta,component,re,im\n");
    for (c, comp) in vals.iter().enumerate() {
        for (j, z) in comp.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / gridsize as f64;
            out.push_str(&format!("{},{c},{},{}\n", fmt(theta), fmt(z.re), fmt(z.im)));
        }
    }
    Ok(out)
}

/// CSV of polar grid samples: `r,theta,component,re,im`.
pub fn polar_csv(g: &PolarGridFunction, config_hash: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# artifact_version={FORMAT_VERSION} config_hash={config_hash}\n"
    ));
    out.push_str("r,theta,component,re,im\n");
    for (c, comp) in g.values.iter().enumerate() {
        for (ri, row) in comp.iter().enumerate() {
            for (ti, z) in row.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{c},{},{}\n",
                    fmt(g.radii[ri]),
                    fmt(g.angles[ti]),
                    fmt(z.re),
                    fmt(z.im)
                ));
            }
        }
    }
    out
}

/// CSV of eigenvalues: `re,im` rows.
pub fn spectrum_csv(eigs: &[Complex64], config_hash: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# artifact_version={FORMAT_VERSION} config_hash={config_hash}\n"
    ));
    out.push_str("re,im\n");
    for z in eigs {
        out.push_str(&format!("{},{}\n", fmt(z.re), fmt(z.im)));
    }
    out
}
