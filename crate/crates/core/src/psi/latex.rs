use num_traits::{One, Signed, Zero};

use super::PsiSeries;
use crate::exact::{PsiPoly, Rational};

fn frac(r: &Rational) -> String {
    let a = r.abs();
    if a.denom().is_one() {
        format!("{}", a.numer())
    } else {
        format!("\\frac{{{}}}{{{}}}", a.numer(), a.denom())
    }
}

fn monomial(u: u32, d: u32) -> String {
    let mut s = String::new();
    match d {
        0 => {}
        1 => s.push('D'),
        k => s.push_str(&format!("D^{{{k}}}")),
    }
    match u {
        0 => {}
        1 => s.push_str("(\\eta+C)"),
        k => s.push_str(&format!("{{(\\eta+C)}}^{{{k}}}")),
    }
    s
}

fn part(out: &mut String, r: &Rational, unit: &str, mono: &str) {
    if r.is_zero() {
        return;
    }
    let neg = r.is_negative();
    if neg {
        out.push('-');
    } else if !out.is_empty() {
        out.push('+');
    }
    let bare = r.abs().is_one() && (!unit.is_empty() || !mono.is_empty());
    if !bare {
        out.push_str(&frac(r));
    }
    if !unit.is_empty() {
        if !bare {
            out.push_str("\\,");
        }
        out.push_str(unit);
    }
    out.push_str(mono);
}

/// LaTeX rendering of one coefficient polynomial.
pub fn latex_poly(p: &PsiPoly) -> String {
    let mut out = String::new();
    for (u, d, c) in p.terms() {
        let mono = monomial(u, d);
        part(&mut out, &c.re, "", &mono);
        part(&mut out, &c.im, "i", &mono);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// A `tabular` in the layout of the published coefficient table: grouped
/// rows through index 1, then one row per polynomial.
pub fn latex_table(series: &PsiSeries) -> String {
    let mut rows: Vec<String> = Vec::new();
    let cell = |p: Option<&PsiPoly>| p.map(|p| format!("${}$", latex_poly(p))).unwrap_or_default();
    if series.max_m >= -2 {
        rows.push(format!("$Q_{{-2}}$, $R_{{-2}}$ & & {} & {}", cell(series.q(-2)), cell(series.r(-2))));
    }
    for k in -1..=1i64 {
        if series.q(k).is_none() && series.p(k).is_none() {
            break;
        }
        rows.push(format!(
            "$P_{{{k}}}$, $Q_{{{k}}}$, $R_{{{k}}}$ & {} & {} & {}",
            cell(series.p(k)),
            cell(series.q(k)),
            cell(series.r(k))
        ));
    }
    let mut k = 2;
    loop {
        let mut any = false;
        for (name, p) in [("P", series.p(k)), ("Q", series.q(k)), ("R", series.r(k))] {
            if let Some(p) = p {
                any = true;
                rows.push(format!("${name}_{{{k}}}$ & \\multicolumn{{3}}{{c}}{{${}$}}", latex_poly(p)));
            }
        }
        if !any {
            break;
        }
        k += 1;
    }
    let mut out = String::from("\\begin{tabular}{c|c|c|c}\n");
    out.push_str(&rows.join("\\\\\\hline\n"));
    out.push_str("\n\\end{tabular}\n");
    out
}
