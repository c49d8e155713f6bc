//! Embedded regression fixture for the first coefficients and a
//! cell-by-cell comparison harness.

use serde::Serialize;

use super::{PsiSeries, SeriesFamily};
use crate::exact::{parse_rational, GaussianRational, PsiPoly};

/// Which series a cell belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Component {
    P,
    Q,
    R,
}

/// One fixture cell: component, index, and `(u, d, re, im)` terms.
#[derive(Clone, Debug)]
pub struct Cell {
    pub component: Component,
    pub index: i64,
    pub terms: Vec<(u32, u32, String, String)>,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{:?}_{}", self.component, self.index)
    }

    pub fn poly(&self) -> PsiPoly {
        let mut p = PsiPoly::zero();
        for (u, d, re, im) in &self.terms {
            let c = GaussianRational::new(
                parse_rational(re).expect("fixture rational"),
                parse_rational(im).expect("fixture rational"),
            );
            p.add_term(*u, *d, &c);
        }
        p
    }
}

type RawCell = (Component, i64, &'static [(u32, u32, &'static str, &'static str)]);

const PLUS_CELLS: &[RawCell] = {
    use Component::*;
    &[
        (Q, -2, &[(0, 0, "0", "-1/5")]),
        (R, -2, &[(0, 0, "-1/5", "0")]),
        (P, -1, &[(0, 0, "0", "2")]),
        (Q, -1, &[(0, 0, "0", "2")]),
        (R, -1, &[(0, 0, "17/9", "0")]),
        (P, 0, &[(0, 0, "0", "71/9")]),
        (Q, 0, &[(0, 0, "0", "-349/81"), (1, 0, "0", "-988/81")]),
        (R, 0, &[(0, 0, "1385/54", "0"), (1, 0, "-988/81", "0")]),
        (P, 1, &[(1, 0, "0", "-9880/81")]),
        (Q, 1, &[(0, 0, "0", "-25991/108"), (1, 0, "0", "64220/243")]),
        (R, 1, &[(0, 0, "-211189/972", "0"), (1, 0, "167960/729", "0")]),
        (P, 2, &[(0, 0, "0", "-2108195/972"), (1, 0, "0", "469300/243")]),
        (
            Q,
            2,
            &[
                (0, 1, "0", "3/10"),
                (0, 0, "0", "-477319147/131220"),
                (1, 0, "0", "-167831753/65610"),
                (2, 0, "0", "-273676/2187"),
            ],
        ),
        (
            R,
            2,
            &[
                (0, 1, "-1/5", "0"),
                (0, 0, "138959125/17496", "0"),
                (1, 0, "-58846039/32805", "0"),
                (2, 0, "-1444456/2187", "0"),
            ],
        ),
        (P, 3, &[(0, 1, "0", "1"), (1, 0, "0", "-96356411/6561"), (2, 0, "0", "-2736760/6561")]),
        (
            Q,
            3,
            &[
                (0, 0, "0", "-25925844899/708588"),
                (0, 1, "0", "32/27"),
                (1, 0, "0", "-516846814/59049"),
                (2, 0, "0", "26636480/2187"),
            ],
        ),
        (
            R,
            3,
            &[
                (0, 1, "-55/27", "0"),
                (0, 0, "64036692917/3542940", "0"),
                (1, 0, "-2458513/2187", "0"),
                (2, 0, "813193160/59049", "0"),
            ],
        ),
        (
            P,
            4,
            &[
                (0, 1, "0", "25/54"),
                (0, 0, "0", "-64653009635/708588"),
                (1, 0, "0", "-107735075/118098"),
                (2, 0, "0", "206615500/6561"),
            ],
        ),
    ]
};

/// The published cells for the given family (minus: `P`, `Q` negated).
pub fn fixture(family: SeriesFamily) -> Vec<Cell> {
    PLUS_CELLS
        .iter()
        .map(|(component, index, terms)| {
            let flip = family == SeriesFamily::Minus && *component != Component::R;
            Cell {
                component: *component,
                index: *index,
                terms: terms
                    .iter()
                    .map(|(u, d, re, im)| {
                        let neg = |s: &str| {
                            if flip {
                                crate::exact::rational_to_string(&-parse_rational(s).expect("fixture rational"))
                            } else {
                                s.to_string()
                            }
                        };
                        (*u, *d, neg(re), neg(im))
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Outcome for one cell.
#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    pub label: String,
    pub matches: bool,
    pub expected: serde_json::Value,
    pub got: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table1Report {
    pub family: SeriesFamily,
    pub cells: Vec<CellResult>,
}

impl Table1Report {
    pub fn all_match(&self) -> bool {
        self.cells.iter().all(|c| c.matches)
    }

    pub fn mismatches(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(|c| !c.matches)
    }
}

/// Compares a generated series against fixture cells.
pub fn compare(series: &PsiSeries, cells: &[Cell]) -> Table1Report {
    let results = cells
        .iter()
        .map(|cell| {
            let want = cell.poly();
            let got = match cell.component {
                Component::P => series.p(cell.index),
                Component::Q => series.q(cell.index),
                Component::R => series.r(cell.index),
            }
            .cloned();
            CellResult {
                label: cell.label(),
                matches: got.as_ref() == Some(&want),
                expected: want.to_json(),
                got: got.map(|g| g.to_json()).unwrap_or(serde_json::Value::Null),
            }
        })
        .collect();
    Table1Report { family: series.family, cells: results }
}

/// Generates through `m = 3` with symbolic `D` and compares.
pub fn verify(family: SeriesFamily) -> crate::error::Result<Table1Report> {
    let series = PsiSeries::generate(3, family, super::DMode::Symbolic)?;
    Ok(compare(&series, &fixture(family)))
}
