//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Criteria 7 and 8 are empirical reproduction targets on the desk-scale
//! glyph data. Their lines are reported like the others but do not fail the
//! target; every other criterion does.

mod common;

use std::sync::OnceLock;

use common::*;
use mvlatent::objectives::ObjectiveKind;

const REPORTED_ONLY: [usize; 2] = [7, 8];

struct Glyph {
    raw: Vec<f64>,
    vcca: Vec<GlyphRun>,
    mvae: Vec<GlyphRun>,
    private: Vec<GlyphRun>,
    private_no_dropout: OnceLock<Vec<GlyphRun>>,
    splits: GlyphSplits,
}

fn glyph() -> &'static Glyph {
    static G: OnceLock<Glyph> = OnceLock::new();
    G.get_or_init(|| {
        let splits = glyph_splits();
        let runs = |kind| GLYPH_SEEDS.iter().map(|&s| glyph_run(&splits, kind, s, 0.2)).collect::<Vec<_>>();
        Glyph {
            raw: GLYPH_SEEDS.iter().map(|&s| raw_error(&splits, s)).collect(),
            vcca: runs(ObjectiveKind::Vcca),
            mvae: runs(ObjectiveKind::Mvae),
            private: runs(ObjectiveKind::VccaPrivate),
            private_no_dropout: OnceLock::new(),
            splits,
        }
    })
}

fn errors(runs: &[GlyphRun]) -> Vec<f64> {
    runs.iter().map(|r| r.error).collect()
}

fn pct(v: &[f64]) -> String {
    v.iter().map(|e| format!("{:.1}", 100.0 * e)).collect::<Vec<_>>().join("/")
}

fn table_ordering() -> Outcome {
    let g = glyph();
    let (raw, vcca, mvae, private) = (median(g.raw.clone()), median(errors(&g.vcca)), median(errors(&g.mvae)), median(errors(&g.private)));
    let seconds: f64 = g.vcca.iter().chain(&g.mvae).chain(&g.private).map(|r| r.seconds).sum();
    let pass = vcca <= 0.5 * raw && vcca < mvae && private <= vcca + 0.02 && seconds < 600.0;
    Outcome::new(
        pass,
        format!(
            "median test error %: raw {:.1}, MVAE {:.1}, VCCA {:.1}, VCCA-private {:.1} (per seed raw {}, MVAE {}, VCCA {}, private {}); training {seconds:.0} s",
            100.0 * raw, 100.0 * mvae, 100.0 * vcca, 100.0 * private, pct(&g.raw), pct(&errors(&g.mvae)), pct(&errors(&g.vcca)), pct(&errors(&g.private))
        ),
    )
}

fn dropout_trend() -> Outcome {
    let g = glyph();
    let without = g.private_no_dropout.get_or_init(|| {
        GLYPH_SEEDS.iter().map(|&s| glyph_run(&g.splits, ObjectiveKind::VccaPrivate, s, 0.0)).collect()
    });
    let lam = |runs: &[GlyphRun]| runs.iter().map(|r| r.lambda_hx.unwrap()).collect::<Vec<_>>();
    let (with_d, without_d) = (lam(&g.private), lam(without));
    let (a, b) = (median(with_d.clone()), median(without_d.clone()));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join("/");
    Outcome::new(
        a < b,
        format!(
            "median lambda(Z, H_x) on the tune split: dropout 0.2 {a:.4} ({}), dropout 0 {b:.4} ({}); test error % {} vs {}",
            fmt(&with_d), fmt(&without_d), pct(&errors(&g.private)), pct(&errors(without))
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "gradient suite", Box::new(gradient_suite)),
        (2, "KL oracle", Box::new(kl_oracle)),
        (3, "ELBO bound", Box::new(elbo_bound)),
        (4, "MVAE limit", Box::new(mvae_limit)),
        (5, "endpoint identities", Box::new(endpoint_identities)),
        (6, "orthogonality score", Box::new(orthogonality_checks)),
        (7, "desk-scale Table 1 ordering", Box::new(table_ordering)),
        (8, "dropout disentanglement trend", Box::new(dropout_trend)),
        (9, "mu-sweep protocol", Box::new(|| sweep_protocol(&tmp.path().join("sweep")))),
        (10, "determinism and persistence", Box::new(|| persistence(&tmp.path().join("persist")))),
        (11, "linear CCA baseline", Box::new(cca_checks)),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut blocking = 0;
    let mut passed = 0;
    let mut ran = 0;
    for (id, name, check) in &criteria {
        if only.as_ref().is_some_and(|o| !o.contains(id)) {
            continue;
        }
        let (out, secs) = timed(check);
        ran += 1;
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict}: {name} [{secs:.1} s] {}", out.detail);
        if out.pass {
            passed += 1;
        } else if !REPORTED_ONLY.contains(id) {
            blocking += 1;
        }
    }
    println!("acceptance: {passed}/{ran} criteria pass");
    if blocking > 0 {
        std::process::exit(1);
    }
}
