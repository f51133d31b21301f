use std::collections::BTreeMap;

use dca_core::analytics::{
    case_study_defects, case_study_groupings, case_study_stats, defect_density, detail_histogram,
    group_defects, inspection_efficiency, pareto, pareto_counts, u_chart, u_chart_per_hour,
    DefectNature, DefectRecord, IterationStats, SystematicError, UnitSize,
};
use proptest::prelude::*;

fn stats_for(id: &str) -> IterationStats {
    case_study_stats()
        .into_iter()
        .find(|s| s.iteration_id == id)
        .unwrap()
}

fn defects_for(id: &str) -> Vec<DefectRecord> {
    case_study_defects()
        .into_iter()
        .filter(|d| d.iteration_id == id)
        .collect()
}

#[test]
fn fixture_matches_size_table() {
    let stats = case_study_stats();
    let defects = case_study_defects();
    let summary: Vec<(String, usize, f64, f64, usize)> = stats
        .iter()
        .map(|s| {
            let n = defects
                .iter()
                .filter(|d| d.iteration_id == s.iteration_id)
                .count();
            (
                s.iteration_id.clone(),
                s.units.len(),
                s.total_size(),
                s.inspection_effort_hours,
                n,
            )
        })
        .collect();
    assert_eq!(
        summary,
        vec![
            ("EL1".to_string(), 8, 69.0, 29.0, 69),
            ("EL2".to_string(), 25, 292.0, 88.0, 181),
            ("EL3".to_string(), 35, 416.0, 77.0, 214),
        ]
    );
}

#[test]
fn densities() {
    let defects = case_study_defects();
    let expected = [
        ("EL1", 69.0 / 69.0, 1.000),
        ("EL2", 181.0 / 292.0, 0.620),
        ("EL3", 214.0 / 416.0, 0.514),
    ];
    for (id, exact, rounded) in expected {
        let d = defect_density(&stats_for(id), &defects).unwrap();
        assert!((d - exact).abs() < 1e-12);
        assert!((d - rounded).abs() <= 0.001, "{id} {d}");
    }
    let el1 = defect_density(&stats_for("EL1"), &defects).unwrap();
    let el3 = defect_density(&stats_for("EL3"), &defects).unwrap();
    assert!((el3 / el1 - 0.514).abs() < 0.001);
}

#[test]
fn efficiencies() {
    let defects = case_study_defects();
    for (id, exact, rounded) in [
        ("EL1", 69.0 / 29.0, 2.379),
        ("EL2", 181.0 / 88.0, 2.057),
        ("EL3", 214.0 / 77.0, 2.779),
    ] {
        let e = inspection_efficiency(&stats_for(id), &defects).unwrap();
        assert!((e - exact).abs() < 1e-12);
        assert!((e - rounded).abs() <= 0.001, "{id} {e}");
    }
}

#[test]
fn el3_pareto() {
    let r = pareto(&defects_for("EL3")).unwrap();
    assert_eq!(r.total, 214);
    assert_eq!(r.entries[0].category, "omission");
    assert_eq!(r.entries[0].count, 76);
    assert_eq!(r.entries[1].category, "incorrect fact");
    assert_eq!(r.entries[1].count, 46);
    assert!((r.entries[0].share - 76.0 / 214.0).abs() < 1e-12);
    assert!((r.cumulative(2) - 0.5701).abs() < 1e-4);
    assert!(r.cumulative(2) < 0.60);
    let rest: usize = r.entries[2..].iter().map(|e| e.count).sum();
    assert_eq!(rest, 92);
}

#[test]
fn el3_u_chart() {
    let stats = stats_for("EL3");
    let r = u_chart(&stats, &case_study_defects()).unwrap();
    let u_bar = 214.0 / 416.0;
    assert!((r.center_line - u_bar).abs() < 1e-12);
    assert!((r.center_line - 0.5144).abs() < 5e-4);
    assert_eq!(r.points.len(), 35);
    // 3 * sqrt(u/9) = sqrt(u); 3 * sqrt(u/16) = 0.75 sqrt(u); 3 * sqrt(u/25) = 0.6 sqrt(u)
    for (n, factor) in [(9.0, 1.0), (16.0, 0.75), (25.0, 0.6)] {
        let p = r
            .points
            .iter()
            .find(|p| p.n == n)
            .expect("unit size present");
        assert!((p.ucl - (u_bar + factor * u_bar.sqrt())).abs() < 1e-12);
        assert!((p.lcl - (u_bar - factor * u_bar.sqrt()).max(0.0)).abs() < 1e-12);
    }
    let nine = r.points.iter().find(|p| p.n == 9.0).unwrap();
    assert!((nine.ucl - 1.2316).abs() < 1e-3);
    assert_eq!(nine.lcl, 0.0);
    assert!(r.flagged().count() >= 1);
    let text = r.chart("EL3 defects per FP").render_text();
    assert!(text.contains("center line: 0.5144"));
}

#[test]
fn per_hour_chart_has_one_point_per_iteration() {
    let r = u_chart_per_hour(&case_study_stats(), &case_study_defects()).unwrap();
    assert_eq!(r.basis, "hours");
    assert_eq!(r.points.len(), 3);
    assert!((r.center_line - 464.0 / 194.0).abs() < 1e-12);
    assert!((r.points[2].u - 214.0 / 77.0).abs() < 1e-12);
}

#[test]
fn systematic_error_counts() {
    let defects = case_study_defects();
    let counts: Vec<(String, String, usize)> = case_study_groupings(&defects)
        .into_iter()
        .map(|g| {
            let out = group_defects(&defects, g).unwrap();
            assert!(out.warnings.is_empty());
            (
                out.error.iteration_id.clone(),
                out.error.label.clone(),
                out.error.member_count(),
            )
        })
        .collect();
    let expected = [
        ("EL1", "Underspecifying Reqs.", 7),
        ("EL1", "Omitting links to between use cases", 5),
        ("EL2", "Omitting links to Business Rules", 21),
        ("EL2", "Omitting details of Business Rules", 7),
        ("EL2", "Linking Business Rules incorrectly", 7),
        ("EL3", "Omitting details of Business Rules", 11),
        ("EL3", "Omitting links to Business Rules", 10),
        ("EL3", "Incorrect facts due to comm. prob.", 19),
        ("EL3", "Linking Business Rules incorrectly", 6),
    ];
    let expected: Vec<(String, String, usize)> = expected
        .iter()
        .map(|(a, b, c)| (a.to_string(), b.to_string(), *c))
        .collect();
    assert_eq!(counts, expected);
}

fn candidate(iteration: &str, members: &[&str]) -> SystematicError {
    SystematicError {
        id: "SE".into(),
        label: "test".into(),
        defect_category: DefectNature::Omission,
        iteration_id: iteration.into(),
        members: members.iter().map(|m| m.to_string()).collect(),
    }
}

#[test]
fn grouping_edge_cases() {
    let defects = case_study_defects();
    let empty = group_defects(&defects, candidate("EL3", &[])).unwrap();
    assert_eq!(empty.error.member_count(), 0);
    assert_eq!(empty.warnings.len(), 1);
    let cross = group_defects(&defects, candidate("EL3", &["EL2-D001"])).unwrap_err();
    assert_eq!(cross.code(), "cross-iteration-member");
    let unknown = group_defects(&defects, candidate("EL3", &["nope"])).unwrap_err();
    assert_eq!(unknown.code(), "unknown-defect");
}

#[test]
fn omission_and_incorrect_fact_detail() {
    let el3 = defects_for("EL3");
    let om = detail_histogram(&el3, Some(DefectNature::Omission), 5);
    let om: Vec<(&str, usize)> = om.iter().map(|d| (d.tag.as_str(), d.count)).collect();
    assert_eq!(
        om,
        [
            ("Business rules", 11),
            ("Actor", 10),
            ("Details in the prototype", 10),
            ("Link to business rules", 10),
            ("Field of a form", 7),
            ("Identification of mandatory fields", 5)
        ]
    );
    let inc = detail_histogram(&el3, Some(DefectNature::IncorrectFact), 5);
    let inc: Vec<(&str, usize)> = inc.iter().map(|d| (d.tag.as_str(), d.count)).collect();
    assert_eq!(
        inc,
        [
            ("Wrong understanding (comm. problem)", 19),
            ("Linking the wrong business rule", 6),
            ("Wrong use case flow", 6),
            ("Prototype is wrong", 5)
        ]
    );
    let strict = detail_histogram(&el3, Some(DefectNature::Omission), 6);
    assert!(strict.iter().all(|d| d.count > 5));
    assert_eq!(strict.len(), 5);
    let untagged: Vec<DefectRecord> = el3.into_iter().filter(|d| d.detail_tag.is_none()).collect();
    assert!(detail_histogram(&untagged, None, 0).is_empty());
}

fn defect(
    i: usize,
    iteration: &str,
    unit: &str,
    nature: DefectNature,
    tag: Option<&str>,
) -> DefectRecord {
    DefectRecord {
        id: format!("d{i}"),
        iteration_id: iteration.into(),
        unit_id: unit.into(),
        nature,
        description: String::new(),
        detail_tag: tag.map(str::to_string),
        systematic_error_id: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pareto_conserves_counts(counts in prop::collection::vec(0usize..50, 1..8)) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let map: BTreeMap<String, usize> = counts.iter().enumerate().map(|(i, c)| (format!("k{i}"), *c)).collect();
        let r = pareto_counts(&map).unwrap();
        prop_assert_eq!(r.entries.iter().map(|e| e.count).sum::<usize>(), counts.iter().sum::<usize>());
        let shares: f64 = r.entries.iter().map(|e| e.share).sum();
        prop_assert!((shares - 1.0).abs() < 1e-9);
        prop_assert!((r.entries.last().unwrap().cumulative_share - 1.0).abs() < 1e-9);
        for w in r.entries.windows(2) {
            prop_assert!(w[0].count >= w[1].count);
            prop_assert!(w[0].cumulative_share <= w[1].cumulative_share);
            if w[0].count == w[1].count {
                prop_assert!(w[0].category < w[1].category);
            }
        }
    }

    #[test]
    fn u_chart_limits(sizes in prop::collection::vec(1u32..60, 2..12), picks in prop::collection::vec(0usize..1000, 0..80)) {
        let mut sizes = sizes;
        sizes.sort();
        sizes.dedup();
        let stats = IterationStats {
            iteration_id: "I".into(),
            units: sizes.iter().enumerate().map(|(i, s)| UnitSize { unit_id: format!("u{i}"), size_fp: *s as f64 }).collect(),
            inspection_effort_hours: 1.0,
        };
        let defects: Vec<DefectRecord> = picks
            .iter()
            .enumerate()
            .map(|(i, p)| defect(i, "I", &format!("u{}", p % sizes.len()), DefectNature::Omission, None))
            .collect();
        let r = u_chart(&stats, &defects).unwrap();
        for p in &r.points {
            prop_assert!(p.lcl >= 0.0);
            prop_assert_eq!(p.flagged, p.u > p.ucl || p.u < p.lcl);
        }
        if r.center_line > 0.0 {
            for w in r.points.windows(2) {
                prop_assert!(w[0].ucl > w[1].ucl);
            }
        }
    }

    #[test]
    fn density_is_scale_consistent(sizes in prop::collection::vec(1u32..40, 1..6), picks in prop::collection::vec(0usize..100, 1..40)) {
        let build = |k: usize| {
            let stats = IterationStats {
                iteration_id: "I".into(),
                units: sizes.iter().enumerate().map(|(i, s)| UnitSize { unit_id: format!("u{i}"), size_fp: (*s as usize * k) as f64 }).collect(),
                inspection_effort_hours: 3.0,
            };
            let defects: Vec<DefectRecord> = (0..k)
                .flat_map(|rep| picks.iter().enumerate().map(move |(i, p)| (rep, i, *p)))
                .map(|(rep, i, p)| defect(rep * 1000 + i, "I", &format!("u{}", p % sizes.len()), DefectNature::Ambiguity, None))
                .collect();
            defect_density(&stats, &defects).unwrap()
        };
        prop_assert!((build(1) - build(2)).abs() < 1e-12);
    }

    #[test]
    fn histogram_conserves_tagged_totals(tags in prop::collection::vec((0usize..5, prop::option::of(0usize..6)), 0..60)) {
        let defects: Vec<DefectRecord> = tags
            .iter()
            .enumerate()
            .map(|(i, (n, t))| {
                let tag = t.map(|t| format!("t{t}"));
                defect(i, "I", "u", DefectNature::ALL[*n], tag.as_deref())
            })
            .collect();
        for nature in DefectNature::ALL {
            let h = detail_histogram(&defects, Some(nature), 0);
            let tagged = defects.iter().filter(|d| d.nature == nature && d.detail_tag.is_some()).count();
            prop_assert_eq!(h.iter().map(|d| d.count).sum::<usize>(), tagged);
        }
    }
}
