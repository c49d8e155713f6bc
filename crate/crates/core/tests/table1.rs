use lorenz_psi::psi::table1;
use lorenz_psi::SeriesFamily;

#[test]
fn plus_family_matches_fixture() {
    let rep = table1::verify(SeriesFamily::Plus).unwrap();
    for c in rep.mismatches() {
        eprintln!("{}: expected {} got {}", c.label, c.expected, c.got);
    }
    assert!(rep.all_match());
}

#[test]
fn minus_family_matches_sign_flipped_fixture() {
    let rep = table1::verify(SeriesFamily::Minus).unwrap();
    assert_eq!(rep.cells.len(), 18);
    assert!(rep.all_match());
}

#[test]
fn perturbed_cell_is_the_only_mismatch() {
    let s = lorenz_psi::PsiSeries::generate(3, SeriesFamily::Plus, lorenz_psi::DMode::Symbolic).unwrap();
    let mut cells = table1::fixture(SeriesFamily::Plus);
    let target = cells.iter().position(|c| c.label() == "Q_1").unwrap();
    // -25991/108 → -25992/108
    let (u, d, re, _) = cells[target].terms[0].clone();
    cells[target].terms[0] = (u, d, re, "-25992/108".into());
    let rep = table1::compare(&s, &cells);
    let bad: Vec<&str> = rep.mismatches().map(|c| c.label.as_str()).collect();
    assert_eq!(bad, ["Q_1"]);
}

#[test]
fn minimal_series_has_only_leading_cells() {
    let s = lorenz_psi::PsiSeries::generate(-2, SeriesFamily::Plus, lorenz_psi::DMode::Symbolic).unwrap();
    assert_eq!(s.triples().len(), 1);
    let rep = table1::compare(&s, &table1::fixture(SeriesFamily::Plus));
    let good: Vec<&str> = rep.cells.iter().filter(|c| c.matches).map(|c| c.label.as_str()).collect();
    assert_eq!(good, ["Q_-2", "R_-2", "P_-1"]);
}
