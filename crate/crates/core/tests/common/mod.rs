//! Checks shared by the integration tests and the acceptance report.
#![allow(dead_code)]

use std::path::Path;
use std::time::Instant;

use mvlatent::cli::{cmd_sweep_mu, cmd_train, RunConfig, CHECKPOINT_DIR, METRICS_FILE, SWEEP_FILE};
use mvlatent::datasets::{generate_two_view, load_idx, load_idx_labels, write_idx, Split, SplitView, SynthConfig, TwoViewDataset};
use mvlatent::distributions::{bernoulli_log_lik, bernoulli_log_lik_logits, gaussian_log_lik, kl_to_standard_normal, reparameterize, DiagonalGaussian, ObservationKind, Sigma};
use mvlatent::evaluation::{
    analytic_linear_gaussian_loglik, classification_error, extract_features, linear_cca, orthogonality_score, select_linear_classifier,
    FeatureSource, SvmConfig, CCA_RIDGE, C_GRID,
};
use mvlatent::networks::{Layer, MlpSpec, Network};
use mvlatent::objectives::{self, Batch, ModelBundle, ModelConfig, ObjectiveConfig, ObjectiveKind};
use mvlatent::rng::{sample_standard_normal, sample_uniform};
use mvlatent::training::{train, PARAMS_FILE, TrainConfig};
use mvlatent::{Result, RngState, Tape, Tensor, Var};

/// Result of one check.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Outcome {
        Outcome { pass, detail: detail.into() }
    }
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

// ---------------------------------------------------------------------------
// Finite differences

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;
pub const FD_KINK_TOL: f64 = 1e-4;

/// Comparison of reverse-mode and central-difference gradients on one instance.
#[derive(Clone, Debug, Default)]
pub struct FdReport {
    /// `max |analytic - numeric| / max(|analytic|, |numeric|)` over smooth coordinates.
    pub rel_error: f64,
    /// Same over coordinates next to a kink, measured with the fine step.
    pub kink_rel_error: f64,
    pub coordinates: usize,
    pub kink_coordinates: usize,
    /// Coordinates within the fine step of a kink, not scored.
    pub excluded: usize,
}

/// Checks a tape expression built from `inputs` (all treated as trainable).
pub fn fd_check_expr(inputs: &[Tensor], build: &dyn Fn(&mut Tape, &[Var]) -> Result<Var>) -> Result<FdReport> {
    let mut tape = Tape::new();
    let vars = inputs.iter().map(|t| tape.leaf(t.clone().with_grad(true))).collect::<Result<Vec<_>>>()?;
    let loss = build(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|v| grads.get(*v).expect("leaf gradient").clone()).collect();
    let value = |ps: &[Tensor]| -> f64 {
        let mut t = Tape::new();
        let vs: Vec<Var> = ps.iter().map(|p| t.leaf(p.clone().with_grad(true)).unwrap()).collect();
        let l = build(&mut t, &vs).unwrap();
        t.value(l).item()
    };
    Ok(fd_compare(inputs, &analytic, &value))
}

/// Step used again on coordinates where the regular step straddles a kink.
pub const FD_FINE_STEP: f64 = 1e-8;

/// Compares `analytic` with central differences of `value` at `params`,
/// coordinate by coordinate. Where the step straddles a kink, coordinates are redone with [`FD_FINE_STEP`], using the
/// central or one-sided slope closest to the analytic value, and scored against the kink tolerance, or excluded if still not smooth.
pub fn fd_compare(params: &[Tensor], analytic: &[Tensor], value: &dyn Fn(&[Tensor]) -> f64) -> FdReport {
    let f0 = value(params);
    let mut work = params.to_vec();
    let mut r = FdReport::default();
    let mut rows = Vec::new();
    for k in 0..params.len() {
        for i in 0..params[k].numel() {
            let orig = params[k].data()[i];
            let mut probe = |h: f64| {
                work[k].data_mut()[i] = orig + h;
                let fp = value(&work);
                work[k].data_mut()[i] = orig - h;
                let fm = value(&work);
                work[k].data_mut()[i] = orig;
                let (fwd, bwd) = ((fp - f0) / h, (f0 - fm) / h);
                ((fp - fm) / (2.0 * h), (fwd - bwd).abs(), [fwd, bwd])
            };
            // On a smooth function the one-sided gap is h f'' + O(h^3): halving
            // the step halves it. A kink within the step breaks that.
            let (central, gap, _) = probe(FD_STEP);
            let (_, half_gap, _) = probe(0.5 * FD_STEP);
            let kink = (gap - 2.0 * half_gap).abs() > 1e-8 * f0.abs().max(1.0);
            let class = if !kink {
                (central, 0)
            } else {
                // The point lies on one side of the kink, so one of the
                // one-sided slopes does not cross it.
                let a = analytic[k].data()[i];
                let (fine, fine_gap, sided) = probe(FD_FINE_STEP);
                let (_, fine_half_gap, _) = probe(0.5 * FD_FINE_STEP);
                let fine = [fine, sided[0], sided[1]].into_iter().min_by(|x, y| (x - a).abs().total_cmp(&(y - a).abs())).unwrap();
                // Roundoff in these slopes is about 1e-7 |f|.
                let still = (fine_gap - 2.0 * fine_half_gap).abs() > 1e-6 * f0.abs().max(1.0);
                (fine, if still { 2 } else { 1 })
            };
            rows.push((analytic[k].data()[i], class.0, class.1));
        }
    }
    let scale = rows.iter().fold(0.0f64, |m, (a, n, _)| m.max(a.abs()).max(n.abs())).max(1e-12);
    r.coordinates = rows.len();
    for (a, n, class) in rows {
        let e = (a - n).abs() / scale;
        match class {
            0 => r.rel_error = r.rel_error.max(e),
            1 => {
                r.kink_coordinates += 1;
                r.kink_rel_error = r.kink_rel_error.max(e);
            }
            _ => r.excluded += 1,
        }
    }
    r
}

/// Contracts `v` with a fixed random tensor so every output entry gets a
/// distinct upstream gradient.
fn contract(tape: &mut Tape, v: Var, seed: u64) -> Result<Var> {
    let shape = tape.shape(v).to_vec();
    let w = sample_standard_normal(&mut RngState::new(seed), &shape);
    let c = tape.constant(w)?;
    let p = tape.mul(v, c)?;
    tape.sum(p)
}

/// Uniform on `[lo, hi]` but at least `gap` away from zero.
fn away_from_zero(rng: &mut RngState, shape: &[usize], lo: f64, hi: f64, gap: f64) -> Tensor {
    sample_uniform(rng, shape, lo, hi).unwrap().map(|v| if v.abs() < gap { v.signum() * gap + v } else { v })
}

type Expr = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

/// `(name, inputs, expression)` for one random instance of every primitive.
pub fn primitive_cases(seed: u64) -> Vec<(&'static str, Vec<Tensor>, Expr)> {
    let mut rng = RngState::new(seed);
    let n = 2 + (seed as usize % 3);
    let d = 2 + (seed as usize % 4);
    let k = 1 + (seed as usize % 3);
    let mut g = |shape: &[usize]| sample_standard_normal(&mut rng, shape);
    let a = g(&[n, d]);
    let b = g(&[n, d]);
    let w = g(&[d, k]);
    let bias = g(&[k]);
    let c = seed.wrapping_mul(31) + 1;
    let mut r2 = RngState::new(seed ^ 0xabc);
    let pos = sample_uniform(&mut r2, &[n, d], 0.2, 3.0).unwrap();
    let kinky = away_from_zero(&mut r2, &[n, d], -2.0, 2.0, 1e-3);
    let probs = sample_uniform(&mut r2, &[n, d], 0.05, 0.95).unwrap();
    let targets = sample_uniform(&mut r2, &[n, d], 0.0, 1.0).unwrap();
    let logit_targets = targets.clone();
    let mask: Vec<f64> = (0..n * d).map(|i| if (i + seed as usize) % 3 == 0 { 0.0 } else { 1.25 }).collect();
    let clamp_in = sample_uniform(&mut r2, &[n, d], -3.0, 3.0).unwrap().map(|v| if (v.abs() - 1.0).abs() < 1e-3 { v * 1.01 } else { v });
    let cut = 1 + seed as usize % (d - 1);

    vec![
        ("affine", vec![a.clone(), w.clone(), bias.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.affine(v[0], v[1], v[2])?;
            contract(t, o, c)
        }) as Expr),
        ("matmul", vec![a.clone(), w.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.matmul(v[0], v[1])?;
            contract(t, o, c)
        })),
        ("add", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.add(v[0], v[1])?;
            contract(t, o, c)
        })),
        ("sub", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.sub(v[0], v[1])?;
            contract(t, o, c)
        })),
        ("mul", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.mul(v[0], v[1])?;
            contract(t, o, c)
        })),
        ("relu", vec![kinky], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.relu(v[0])?;
            contract(t, o, c)
        })),
        ("sigmoid", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.sigmoid(v[0])?;
            contract(t, o, c)
        })),
        ("softplus", vec![a.map(|v| 4.0 * v)], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.softplus(v[0])?;
            contract(t, o, c)
        })),
        ("exp", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.exp(v[0])?;
            contract(t, o, c)
        })),
        ("log", vec![pos.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.log(v[0])?;
            contract(t, o, c)
        })),
        ("square", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.square(v[0])?;
            contract(t, o, c)
        })),
        ("sum", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let s = t.square(v[0])?;
            t.sum(s)
        })),
        ("mean", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let s = t.square(v[0])?;
            t.mean(s)
        })),
        ("concat", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.concat(&[v[0], v[1]])?;
            contract(t, o, c)
        })),
        ("slice", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.slice(v[0], cut, d)?;
            contract(t, o, c)
        })),
        ("scale", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.scale(v[0], -1.7)?;
            contract(t, o, c)
        })),
        ("add_const", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.add_const(v[0], 0.3)?;
            let o = t.square(o)?;
            contract(t, o, c)
        })),
        ("mask", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.mask(v[0], mask.clone())?;
            contract(t, o, c)
        })),
        ("clamp", vec![clamp_in], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.clamp(v[0], -1.0, 1.0)?;
            contract(t, o, c)
        })),
        ("tile_rows", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.tile_rows(v[0], 3)?;
            contract(t, o, c)
        })),
        ("row_cosine", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let o = t.row_cosine(v[0], v[1], 1e-12)?;
            contract(t, o, c)
        })),
        ("kl_to_standard_normal", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let q = DiagonalGaussian::new(t, v[0], v[1])?;
            kl_to_standard_normal(t, &q)
        })),
        ("reparameterize", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let q = DiagonalGaussian::new(t, v[0], v[1])?;
            let eps = sample_standard_normal(&mut RngState::new(c), &[n, d]);
            let z = reparameterize(t, &q, &eps)?;
            contract(t, z, c + 1)
        })),
        ("bernoulli_log_lik", vec![probs.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let x = t.constant(targets.clone())?;
            bernoulli_log_lik(t, x, v[0])
        })),
        ("bernoulli_log_lik_logits", vec![a.map(|v| 4.0 * v)], Box::new(move |t: &mut Tape, v: &[Var]| {
            let x = t.constant(logit_targets.clone())?;
            bernoulli_log_lik_logits(t, x, v[0])
        })),
        ("gaussian_log_lik_fixed", vec![a.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let x = t.constant(Tensor::full(&[n, d], 0.4))?;
            gaussian_log_lik(t, x, v[0], Sigma::Fixed(0.7))
        })),
        ("gaussian_log_lik_learned", vec![a.clone(), b.clone()], Box::new(move |t: &mut Tape, v: &[Var]| {
            let x = t.constant(Tensor::full(&[n, d], -0.2))?;
            gaussian_log_lik(t, x, v[0], Sigma::Log(v[1]))
        })),
    ]
}

/// A small random model of `kind` with dropout and two samples per point.
pub fn objective_case(kind: ObjectiveKind, seed: u64) -> (ModelBundle, Batch, ObjectiveConfig) {
    let (dx, dy) = (5, 3);
    let mut m = ModelConfig::new(kind);
    m.d_z = 2;
    m.d_hx = 2;
    m.d_hy = 3;
    m.encoder_widths = vec![4];
    m.decoder_widths = vec![4];
    m.obs_x = ObservationKind::BernoulliMean;
    m.obs_y = if seed % 2 == 0 {
        ObservationKind::GaussianLearnedSigma { sigmoid_mean: true }
    } else {
        ObservationKind::GaussianFixedSigma { sigma: 0.5, sigmoid_mean: false }
    };
    let mut bundle = ModelBundle::new(&m, dx, dy, &RngState::new(seed)).unwrap();
    let mut rng = RngState::new(seed + 1000);
    // Nonzero biases, as after training; an all-zero code would put the
    // cosine at its 1e-12-wide singular point.
    for p in bundle.params_mut() {
        if p.shape().len() == 1 {
            for v in p.data_mut() {
                *v = 0.3 * rng.standard_normal();
            }
        }
    }
    let x = sample_uniform(&mut rng, &[4, dx], 0.0, 1.0).unwrap();
    let y = sample_uniform(&mut rng, &[4, dy], 0.0, 1.0).unwrap();
    let mut batch = Batch::new(x, y).unwrap();
    if kind == ObjectiveKind::Contrastive {
        batch = batch.with_negatives(sample_uniform(&mut rng, &[4, dy], 0.0, 1.0).unwrap()).unwrap();
    }
    let cfg = ObjectiveConfig { samples: 2, mu: 0.3 + 0.05 * (seed % 5) as f64, dropout_rate: 0.2, margin: 0.5, ..Default::default() };
    (bundle, batch, cfg)
}

pub fn objective_fd(kind: ObjectiveKind, seed: u64) -> Result<FdReport> {
    let (bundle, batch, cfg) = objective_case(kind, seed);
    let rng = RngState::new(seed + 2000);
    let mut tape = Tape::new();
    let bb = bundle.bind(&mut tape)?;
    let out = objectives::loss(&mut tape, &bb, &batch, &cfg, &mut rng.clone())?;
    let grads = tape.backward(out.loss)?;
    let analytic: Vec<Tensor> = bb.param_vars().iter().map(|v| grads.get(*v).expect("param gradient").clone()).collect();
    let params: Vec<Tensor> = bundle.params().into_iter().cloned().collect();
    let value = |ps: &[Tensor]| -> f64 {
        let mut b = bundle.clone();
        for (dst, src) in b.params_mut().into_iter().zip(ps) {
            dst.data_mut().copy_from_slice(src.data());
        }
        objectives::evaluate(&b, &batch, &cfg, &mut rng.clone()).unwrap().0
    };
    Ok(fd_compare(&params, &analytic, &value))
}

pub const ALL_KINDS: [ObjectiveKind; 7] = [
    ObjectiveKind::Vcca,
    ObjectiveKind::VccaPrivate,
    ObjectiveKind::BiVcca,
    ObjectiveKind::BiVccaPrivate,
    ObjectiveKind::Mvae,
    ObjectiveKind::MvaeVar,
    ObjectiveKind::Contrastive,
];

pub const INSTANCES: u64 = 20;

/// Criterion 1: every primitive and every objective on 20 random instances.
pub fn gradient_suite() -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut worst_kink = 0.0f64;
    let mut kinks = 0;
    let mut excluded = 0;
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut record = |name: String, r: Result<FdReport>| match r {
        Ok(r) => {
            checked += 1;
            kinks += r.kink_coordinates;
            excluded += r.excluded;
            worst_kink = worst_kink.max(r.kink_rel_error);
            if r.rel_error > worst.0 {
                worst = (r.rel_error, name.clone());
            }
            if r.rel_error >= FD_TOL || r.kink_rel_error >= FD_KINK_TOL {
                failures.push(format!("{name}: {:.2e} / kink {:.2e}", r.rel_error, r.kink_rel_error));
            }
        }
        Err(e) => failures.push(format!("{name}: {e}")),
    };
    for seed in 0..INSTANCES {
        for (name, inputs, expr) in primitive_cases(seed) {
            record(format!("{name}#{seed}"), fd_check_expr(&inputs, &*expr));
        }
        for kind in ALL_KINDS {
            record(format!("{kind:?}#{seed}"), objective_fd(kind, seed));
        }
    }
    let detail = format!(
        "{checked} instances; worst smooth relative error {:.2e} ({}), {kinks} kink-adjacent coordinates with worst {:.2e}, {excluded} excluded within {FD_FINE_STEP:.0e} of a kink{}",
        worst.0,
        worst.1,
        worst_kink,
        if failures.is_empty() { String::new() } else { format!("; failures: {}", failures.join(", ")) }
    );
    Outcome::new(failures.is_empty() && checked == INSTANCES as usize * (primitive_cases(0).len() + ALL_KINDS.len()), detail)
}

// ---------------------------------------------------------------------------
// KL oracle

pub fn kl_closed_form(mu: &[f64], log_sigma: &[f64]) -> f64 {
    let mut tape = Tape::new();
    let d = mu.len();
    let m = tape.constant(Tensor::from_vec(&[1, d], mu.to_vec()).unwrap()).unwrap();
    let l = tape.constant(Tensor::from_vec(&[1, d], log_sigma.to_vec()).unwrap()).unwrap();
    let q = DiagonalGaussian::new(&mut tape, m, l).unwrap();
    let kl = kl_to_standard_normal(&mut tape, &q).unwrap();
    tape.value(kl).item()
}

/// Monte-Carlo `E_q[log q(z) - log p(z)]` and its standard error.
pub fn kl_monte_carlo(mu: &[f64], log_sigma: &[f64], samples: usize, rng: &mut RngState) -> (f64, f64) {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let mut v = 0.0;
        for j in 0..mu.len() {
            let e = rng.standard_normal();
            let z = mu[j] + log_sigma[j].exp() * e;
            v += -0.5 * e * e - log_sigma[j] + 0.5 * z * z;
        }
        s += v;
        s2 += v * v;
    }
    let n = samples as f64;
    let mean = s / n;
    (mean, ((s2 / n - mean * mean) / n).sqrt())
}

/// Criterion 2.
pub fn kl_oracle() -> Outcome {
    let mut rng = RngState::new(2024);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for _ in 0..50 {
        let d = 1 + rng.below(4);
        let mu: Vec<f64> = (0..d).map(|_| 1.5 * rng.standard_normal()).collect();
        let ls: Vec<f64> = (0..d).map(|_| -1.0 + 2.0 * rng.uniform01()).collect();
        let exact = kl_closed_form(&mu, &ls);
        let (mc, se) = kl_monte_carlo(&mu, &ls, 100_000, &mut rng);
        let z = (exact - mc).abs() / se;
        worst = worst.max(z);
        if z > 3.0 {
            bad += 1;
        }
    }
    Outcome::new(bad == 0, format!("50 posteriors, 1e5 samples each; worst deviation {worst:.2} standard errors, {bad} beyond 3"))
}

// ---------------------------------------------------------------------------
// ELBO bound on linear-Gaussian models

fn linear_net(input: usize, output: usize, weight: Vec<f64>) -> Network {
    let spec = MlpSpec::new(input, vec![], mvlatent::networks::Head::GaussianMeans { dim: output, sigmoid: false }).unwrap();
    Network::from_layers(spec, vec![Layer { weight: Tensor::from_vec(&[input, output], weight).unwrap(), bias: Tensor::zeros(&[output]) }])
        .unwrap()
}

/// One linear-Gaussian instance: `(bundle, x, y, exact log p(x, y))`.
pub fn linear_gaussian_instance(private: bool, seed: u64) -> (ModelBundle, Tensor, Tensor, f64) {
    let mut rng = RngState::new(seed);
    let mut pick = || 1 + rng.below(2);
    let (dx, dy, dz) = (pick(), pick(), pick());
    let (dhx, dhy) = if private { (pick(), pick()) } else { (0, 0) };
    let kind = if private { ObjectiveKind::VccaPrivate } else { ObjectiveKind::Vcca };
    let mut m = ModelConfig::new(kind);
    m.d_z = dz;
    m.d_hx = dhx.max(1);
    m.d_hy = dhy.max(1);
    m.encoder_widths = vec![];
    m.decoder_widths = vec![];
    let unit = ObservationKind::GaussianFixedSigma { sigma: 1.0, sigmoid_mean: false };
    m.obs_x = unit.clone();
    m.obs_y = unit;
    let mut bundle = ModelBundle::new(&m, dx, dy, &RngState::new(seed + 1)).unwrap();
    let mut rng = RngState::new(seed + 2);
    // Decoder weights are [input, output]; input columns are (z, h).
    let wdx = sample_standard_normal(&mut rng, &[dz + dhx, dx]);
    let wdy = sample_standard_normal(&mut rng, &[dz + dhy, dy]);
    bundle.dec_x = Some(linear_net(dz + dhx, dx, wdx.data().to_vec()));
    bundle.dec_y = Some(linear_net(dz + dhy, dy, wdy.data().to_vec()));
    // Joint latent (z, h_x, h_y): x = A_x u + e, y = A_y u + e.
    let du = dz + dhx + dhy;
    let mut ax = Tensor::zeros(&[dx, du]);
    let mut ay = Tensor::zeros(&[dy, du]);
    for i in 0..dx {
        for j in 0..dz + dhx {
            ax.data_mut()[i * du + j] = wdx.data()[j * dx + i];
        }
    }
    for i in 0..dy {
        for j in 0..dz {
            ay.data_mut()[i * du + j] = wdy.data()[j * dy + i];
        }
        for j in 0..dhy {
            ay.data_mut()[i * du + dz + dhx + j] = wdy.data()[(dz + j) * dy + i];
        }
    }
    let x = sample_standard_normal(&mut rng, &[1, dx]).map(|v| 1.5 * v);
    let y = sample_standard_normal(&mut rng, &[1, dy]).map(|v| 1.5 * v);
    let exact = analytic_linear_gaussian_loglik(&ax, &ay, x.data(), y.data()).unwrap();
    (bundle, x, y, exact)
}

/// `-loss` with `L = 256` and the standard error of that estimate.
pub fn elbo_estimate(bundle: &ModelBundle, x: &Tensor, y: &Tensor, seed: u64) -> (f64, f64) {
    let batch = Batch::new(x.clone(), y.clone()).unwrap();
    let cfg = ObjectiveConfig { samples: 256, ..Default::default() };
    let elbo = -objectives::evaluate(bundle, &batch, &cfg, &mut RngState::new(seed)).unwrap().0;
    let single = ObjectiveConfig { samples: 1, ..Default::default() };
    let root = RngState::new(seed ^ 0x5eed);
    let draws: Vec<f64> = (0..256)
        .map(|i| -objectives::evaluate(bundle, &batch, &single, &mut root.substream(i)).unwrap().0)
        .collect();
    let m = draws.iter().sum::<f64>() / 256.0;
    let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / 255.0;
    (elbo, (var / 256.0).sqrt())
}

/// Criterion 3.
pub fn elbo_bound() -> Outcome {
    let mut violations = 0;
    let mut beyond_exact = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for private in [false, true] {
        for seed in 0..100u64 {
            let (bundle, x, y, exact) = linear_gaussian_instance(private, seed * 7 + private as u64);
            let (elbo, se) = elbo_estimate(&bundle, &x, &y, seed);
            worst_gap = worst_gap.max((elbo - exact) / se.max(1e-300));
            if elbo > exact {
                beyond_exact += 1;
            }
            if elbo > exact + 3.0 * se {
                violations += 1;
            }
        }
    }
    Outcome::new(
        violations == 0,
        format!("200 instances (100 VCCA, 100 VCCA-private); {violations} above log p + 3 SE, {beyond_exact} above log p within noise; max (ELBO - log p)/SE = {worst_gap:.2}"),
    )
}

// ---------------------------------------------------------------------------
// MVAE limit and bidirectional endpoints

/// Criterion 4: with the posterior collapsed, `loss - KL` of VCCA equals the
/// autoencoder loss plus `(d_x + d_y)/2 ln 2 pi`.
pub fn mvae_limit() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let (dx, dy) = (3 + seed as usize % 3, 2 + seed as usize % 4);
        let unit = ObservationKind::GaussianFixedSigma { sigma: 1.0, sigmoid_mean: false };
        let mut vc = ModelConfig::new(ObjectiveKind::Vcca);
        vc.d_z = 2;
        vc.encoder_widths = vec![5];
        vc.decoder_widths = vec![4];
        vc.obs_x = unit.clone();
        vc.obs_y = unit;
        let v = ModelBundle::new(&vc, dx, dy, &RngState::new(seed)).unwrap();
        let mut mc = vc.clone();
        mc.kind = ObjectiveKind::Mvae;
        let mut a = ModelBundle::zeros(&mc, dx, dy).unwrap();
        let mut layers = v.enc_zx.layers().to_vec();
        let head = layers.last_mut().unwrap();
        let (fan_in, d_z) = (head.weight.rows(), vc.d_z);
        let w: Vec<f64> = (0..fan_in).flat_map(|r| head.weight.row(r)[..d_z].to_vec()).collect();
        head.weight = Tensor::from_vec(&[fan_in, d_z], w).unwrap();
        head.bias = Tensor::from_vec(&[d_z], head.bias.data()[..d_z].to_vec()).unwrap();
        a.enc_zx = Network::from_layers(a.enc_zx.spec().clone(), layers).unwrap();
        a.dec_x = v.dec_x.clone();
        a.dec_y = v.dec_y.clone();

        let mut rng = RngState::new(seed + 50);
        let batch = Batch::new(sample_standard_normal(&mut rng, &[6, dx]), sample_standard_normal(&mut rng, &[6, dy])).unwrap();
        let cfg = ObjectiveConfig { log_sigma_range: (-20.0, -20.0), ..Default::default() };
        let (lv, tv) = objectives::evaluate(&v, &batch, &cfg, &mut RngState::new(seed + 51)).unwrap();
        let (la, _) = objectives::evaluate(&a, &batch, &ObjectiveConfig::default(), &mut RngState::new(seed + 52)).unwrap();
        let constant = 0.5 * (dx + dy) as f64 * (2.0 * std::f64::consts::PI).ln();
        worst = worst.max(((lv - tv.kl_z.unwrap()) - (la + constant)).abs());
    }
    Outcome::new(worst < 1e-6, format!("20 random nets, log sigma = -20; max |(VCCA loss - KL) - (MVAE loss + const)| = {worst:.2e}"))
}

/// Shared-only VCCA bundle reading the bidirectional model from the other
/// side: views swapped and `q(z|y)` as its encoder.
fn swapped_vcca(bi: &ModelBundle) -> ModelBundle {
    ModelBundle {
        kind: ObjectiveKind::Vcca,
        d_z: bi.d_z,
        d_hx: 0,
        d_hy: 0,
        obs_x: bi.obs_y.clone(),
        obs_y: bi.obs_x.clone(),
        enc_zx: bi.enc_zy.clone().unwrap(),
        enc_zy: None,
        enc_hx: None,
        enc_hy: None,
        dec_x: bi.dec_y.clone(),
        dec_y: bi.dec_x.clone(),
    }
}

/// Criterion 5.
pub fn endpoint_identities() -> Outcome {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for seed in 0..10u64 {
        for (bi_kind, single_kind) in [(ObjectiveKind::BiVcca, ObjectiveKind::Vcca), (ObjectiveKind::BiVccaPrivate, ObjectiveKind::VccaPrivate)] {
            let (bi, batch, cfg) = objective_case(bi_kind, seed);
            let single = ModelBundle { kind: single_kind, enc_zy: None, ..bi.clone() };
            let cfg1 = ObjectiveConfig { mu: 1.0, ..cfg.clone() };
            let a = objectives::evaluate(&bi, &batch, &cfg1, &mut RngState::new(seed)).unwrap().0;
            let b = objectives::evaluate(&single, &batch, &cfg1, &mut RngState::new(seed)).unwrap().0;
            checked += 1;
            if a.to_bits() != b.to_bits() {
                mismatches.push(format!("{bi_kind:?} mu=1 seed {seed}: {a} vs {b}"));
            }
            if bi_kind == ObjectiveKind::BiVcca {
                let cfg0 = ObjectiveConfig { mu: 0.0, dropout_rate: 0.0, ..cfg.clone() };
                let a = objectives::evaluate(&bi, &batch, &cfg0, &mut RngState::new(seed)).unwrap().0;
                let flipped = Batch::new(batch.y.clone(), batch.x.clone()).unwrap();
                let b = objectives::evaluate(&swapped_vcca(&bi), &flipped, &cfg0, &mut RngState::new(seed)).unwrap().0;
                checked += 1;
                if a.to_bits() != b.to_bits() {
                    mismatches.push(format!("BiVcca mu=0 seed {seed}: {a} vs {b}"));
                }
            }
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        format!("{checked} comparisons (mu=1 against the x-conditioned model, mu=0 against a view-swapped VCCA), {} not bit-identical{}", mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!(": {}", mismatches.join("; ")) }),
    )
}

// ---------------------------------------------------------------------------
// Orthogonality and linear CCA

/// Criterion 6.
pub fn orthogonality_checks() -> Outcome {
    let t = |rows: &[&[f64]]| Tensor::from_rows(rows).unwrap();
    let z = t(&[&[1.0], &[0.0]]);
    let e0 = orthogonality_score(&z, &t(&[&[0.0], &[3.0]])).unwrap();
    let e1 = orthogonality_score(&z, &z).unwrap();
    let e5 = orthogonality_score(&z, &t(&[&[1.0], &[1.0]])).unwrap();
    let examples = e0.abs() <= 1e-12 && (e1 - 1.0).abs() <= 1e-12 && (e5 - 0.5).abs() <= 1e-12;
    let mut rng = RngState::new(6);
    let mut out_of_range = 0;
    for i in 0..1000 {
        let n = 1 + rng.below(8);
        let z = sample_standard_normal(&mut rng, &[n, 1 + i % 4]);
        let h = sample_standard_normal(&mut rng, &[n, 1 + (i / 4) % 3]);
        let s = orthogonality_score(&z, &h).unwrap();
        if !(0.0..=1.0).contains(&s) {
            out_of_range += 1;
        }
    }
    Outcome::new(
        examples && out_of_range == 0,
        format!("examples {e0:.1e} / {e1:.15} / {e5:.15}; {out_of_range} of 1000 random scores outside [0, 1]"),
    )
}

/// Criterion 11.
pub fn cca_checks() -> Outcome {
    let x = sample_standard_normal(&mut RngState::new(0), &[1000, 1]);
    let identity = linear_cca(&x, &x, 1).unwrap().correlations[0];
    let n = 100_000;
    let mut rng = RngState::new(1);
    let s = sample_standard_normal(&mut rng, &[n, 1]);
    let e = sample_standard_normal(&mut rng, &[n, 2]);
    let xs = Tensor::from_vec(&[n, 1], (0..n).map(|i| s.data()[i] + e.row(i)[0]).collect()).unwrap();
    let ys = Tensor::from_vec(&[n, 1], (0..n).map(|i| s.data()[i] + e.row(i)[1]).collect()).unwrap();
    let shared = linear_cca(&xs, &ys, 1).unwrap().correlations[0];

    // Whitening on a correlated 3-D view with a 2-D partner.
    let mut rng = RngState::new(2);
    let base = sample_standard_normal(&mut rng, &[500, 3]);
    let mix = [[2.0, 0.3, 0.0], [0.5, 1.0, 0.0], [0.1, -0.4, 0.7]];
    let v1 = Tensor::from_vec(&[500, 3], (0..500).flat_map(|i| {
        let r = base.row(i);
        (0..3).map(move |j| (0..3).map(|k| r[k] * mix[k][j]).sum::<f64>() + 1.0)
    }).collect()).unwrap();
    let v2 = Tensor::from_vec(&[500, 2], (0..500).flat_map(|i| [base.row(i)[0] + 0.5 * base.row(i)[2], rng.standard_normal()]).collect()).unwrap();
    let m = linear_cca(&v1, &v2, 2).unwrap();
    let mut whiten_err: f64 = 0.0;
    for (view, proj) in [(&v1, &m.proj_x), (&v2, &m.proj_y)] {
        let (rows, d) = (view.rows(), view.last_dim());
        let means: Vec<f64> = (0..d).map(|j| (0..rows).map(|i| view.row(i)[j]).sum::<f64>() / rows as f64).collect();
        let k = proj.last_dim();
        for a in 0..k {
            for b in 0..k {
                // p_a^T (C + ridge I) p_b
                let mut acc = 0.0;
                for i in 0..rows {
                    let pa: f64 = (0..d).map(|j| (view.row(i)[j] - means[j]) * proj.row(j)[a]).sum();
                    let pb: f64 = (0..d).map(|j| (view.row(i)[j] - means[j]) * proj.row(j)[b]).sum();
                    acc += pa * pb;
                }
                acc /= rows as f64;
                acc += CCA_RIDGE * (0..d).map(|j| proj.row(j)[a] * proj.row(j)[b]).sum::<f64>();
                let target = if a == b { 1.0 } else { 0.0 };
                whiten_err = whiten_err.max((acc - target).abs());
            }
        }
    }
    let pass = (identity - 1.0).abs() < 1e-5 && (shared - 0.5).abs() < 0.02 && whiten_err < 1e-6;
    Outcome::new(pass, format!("identity {identity:.7}, shared-signal {shared:.4} (target 0.5), whitening error {whiten_err:.1e}"))
}

// ---------------------------------------------------------------------------
// Runs, persistence and the sweep

pub fn small_run_config(kind: ObjectiveKind) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.data = mvlatent::cli::DataConfig::Synthetic(SynthConfig { train: 200, tune: 60, test: 60, seed: 4, ..Default::default() });
    cfg.model = ModelConfig::new(kind);
    cfg.model.encoder_widths = vec![32];
    cfg.model.decoder_widths = vec![32];
    cfg.model.d_hx = 4;
    cfg.model.d_hy = 4;
    cfg.train.epochs = 3;
    cfg.train.batch_size = 50;
    cfg.train.seed = 9;
    cfg.train.objective.dropout_rate = 0.2;
    cfg.eval.include_raw = false;
    cfg
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Criterion 9.
pub fn sweep_protocol(dir: &Path) -> Outcome {
    let cfg = small_run_config(ObjectiveKind::BiVcca);
    let mus = [1.0, 0.8, 0.5, 0.2];
    let run = |sub: &str| cmd_sweep_mu(&cfg, &dir.join(sub), &mus).map(|_| read(&dir.join(sub).join(SWEEP_FILE)));
    let (a, b) = match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::new(false, format!("sweep failed: {e}")),
    };
    let text = String::from_utf8_lossy(&a).to_string();
    let lines: Vec<&str> = text.lines().collect();
    let shaped = lines.first() == Some(&"mu,tune_metric,test_metric")
        && lines.len() == 5
        && lines[1..].iter().zip(mus).all(|(l, mu)| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect();
            f.len() == 3 && f[0] == mu && (0.0..=1.0).contains(&f[1]) && (0.0..=1.0).contains(&f[2])
        });
    Outcome::new(a == b && shaped, format!("two runs byte-identical: {}; header + {} rows well-formed: {shaped}", a == b, lines.len().saturating_sub(1)))
}

/// Criterion 10.
pub fn persistence(dir: &Path) -> Outcome {
    let mut cfg = small_run_config(ObjectiveKind::VccaPrivate);
    cfg.train.epochs = 4;
    let mut notes = Vec::new();

    let same_seed = match (cmd_train(&cfg, &dir.join("a"), None), cmd_train(&cfg, &dir.join("b"), None)) {
        (Ok(_), Ok(_)) => read(&dir.join("a").join(METRICS_FILE)) == read(&dir.join("b").join(METRICS_FILE)),
        _ => false,
    };
    notes.push(format!("same seed metrics identical: {same_seed}"));

    let mut half = cfg.clone();
    half.train.epochs = 2;
    let resumed_dir = dir.join("resumed");
    let resumed = cmd_train(&half, &resumed_dir, None)
        .and_then(|_| cmd_train(&cfg, &resumed_dir, Some(&resumed_dir.join(CHECKPOINT_DIR))))
        .is_ok()
        && read(&resumed_dir.join(METRICS_FILE)) == read(&dir.join("a").join(METRICS_FILE))
        && read(&resumed_dir.join(CHECKPOINT_DIR).join(PARAMS_FILE)) == read(&dir.join("a").join(CHECKPOINT_DIR).join(PARAMS_FILE));
    notes.push(format!("resume after 2 of 4 epochs replays metrics and parameters: {resumed}"));

    let idx = idx_round_trip(dir);
    notes.push(format!("IDX fixture round trip: {idx}"));
    Outcome::new(same_seed && resumed && idx, notes.join("; "))
}

/// Handcrafted big-endian IDX bytes, loaded and written back.
pub fn idx_round_trip(dir: &Path) -> bool {
    let mut images = vec![0x00, 0x00, 0x08, 0x03, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 3];
    let pixels: Vec<u8> = vec![0, 1, 127, 128, 254, 255, 7, 200, 33, 64, 99, 250];
    images.extend(&pixels);
    let mut labels = vec![0x00, 0x00, 0x08, 0x01, 0, 0, 0, 2];
    labels.extend([3u8, 9]);
    let (ip, lp) = (dir.join("fixture-images.idx"), dir.join("fixture-labels.idx"));
    std::fs::write(&ip, &images).unwrap();
    std::fs::write(&lp, &labels).unwrap();
    let (Ok(t), Ok(l)) = (load_idx(&ip), load_idx_labels(&lp)) else { return false };
    let exact_values = t.shape() == [2, 2, 3] && t.data().iter().zip(&pixels).all(|(v, &p)| v.to_bits() == (p as f64 / 255.0).to_bits());
    let back: Vec<u8> = t.data().iter().map(|v| (v * 255.0).round() as u8).collect();
    let (ip2, lp2) = (dir.join("again-images.idx"), dir.join("again-labels.idx"));
    let written = write_idx(&ip2, &[2, 2, 3], &back).is_ok() && write_idx(&lp2, &[2], &l.iter().map(|&v| v as u8).collect::<Vec<_>>()).is_ok();
    exact_values && l == [3, 9] && written && read(&ip2) == images && read(&lp2) == labels
}

// ---------------------------------------------------------------------------
// Desk-scale glyph experiments

pub const GLYPH_SEEDS: [u64; 3] = [0, 1, 2];

/// Model used by the glyph experiments.
pub fn glyph_model(kind: ObjectiveKind) -> ModelConfig {
    let mut m = ModelConfig::new(kind);
    m.obs_y = ObservationKind::GaussianFixedSigma { sigma: 0.1, sigmoid_mean: true };
    m
}

pub fn glyph_train_config(seed: u64, dropout: f64) -> TrainConfig {
    let mut t = TrainConfig { epochs: 100, batch_size: 100, seed, ..Default::default() };
    t.optimizer.learning_rate = 2e-3;
    t.objective.dropout_rate = dropout;
    t
}

pub struct GlyphSplits {
    pub train: SplitView,
    pub tune: SplitView,
    pub test: SplitView,
}

pub fn glyph_splits() -> GlyphSplits {
    let ds: TwoViewDataset = generate_two_view(&SynthConfig::default()).unwrap();
    GlyphSplits { train: ds.split(Split::Train).unwrap(), tune: ds.split(Split::Tune).unwrap(), test: ds.split(Split::Test).unwrap() }
}

/// Test error of a linear classifier whose `C` is chosen on the tune split.
pub fn probe_error(train: &Tensor, tune: &Tensor, test: &Tensor, s: &GlyphSplits, seed: u64) -> f64 {
    let lab = |v: &SplitView| v.labels.clone().unwrap();
    let svm = SvmConfig { seed, ..Default::default() };
    let sel = select_linear_classifier((train, &lab(&s.train)), (tune, &lab(&s.tune)), &C_GRID, &svm).unwrap();
    classification_error(&sel.classifier, test, &lab(&s.test)).unwrap()
}

/// One trained glyph model: its probe error and, for private models,
/// `lambda(Z, H_x)` on the tune split.
#[derive(Clone, Debug)]
pub struct GlyphRun {
    pub error: f64,
    pub lambda_hx: Option<f64>,
    pub seconds: f64,
}

pub fn glyph_run(s: &GlyphSplits, kind: ObjectiveKind, seed: u64, dropout: f64) -> GlyphRun {
    let ((ck, _), seconds) = timed(|| train(&glyph_model(kind), glyph_train_config(seed, dropout), &s.train.x, &s.train.y).unwrap());
    let f = |v: &SplitView, which| extract_features(&ck.bundle, &v.x, &v.y, which).unwrap().values;
    let z = |v: &SplitView| f(v, FeatureSource::ZFromX);
    let error = probe_error(&z(&s.train), &z(&s.tune), &z(&s.test), s, seed);
    let lambda_hx = kind.has_private().then(|| orthogonality_score(&z(&s.tune), &f(&s.tune, FeatureSource::Hx)).unwrap());
    GlyphRun { error, lambda_hx, seconds }
}

pub fn raw_error(s: &GlyphSplits, seed: u64) -> f64 {
    probe_error(&s.train.x, &s.tune.x, &s.test.x, s, seed)
}
