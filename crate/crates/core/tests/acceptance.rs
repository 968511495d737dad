//! Acceptance checks. Runs without the libtest harness and prints one line
//! per criterion; exits non-zero if any criterion fails.

use macpolar::codec::scheme::{
    CodeArtifact, CodingScheme, CornerScheme, JointScheme, SchemeParams,
};
use macpolar::codec::{polar_encode, CodeSpec, ConstructParams, JointDecoder};
use macpolar::metrics::{bhattacharyya, info_triple, ml_error_prob, point_info, InfoTriple};
use macpolar::polarizer::{polarize_exact, Mode, MonteCarloEstimator};
use macpolar::transform::{
    linear_channel, linear_coefficients, marginal_channel, Marginal, Synthesizer, TransformPath,
};
use macpolar::{Mac, PointChannel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

const TOL: f64 = 1e-9;
const ENSEMBLE: usize = 50;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mac_ensemble(seed: u64) -> Vec<Mac> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ENSEMBLE)
        .map(|k| {
            let q = if k % 2 == 0 { 2 } else { 3 };
            let outputs = rng.gen_range(2..=5);
            let sparsity = if k % 5 == 0 { 0.3 } else { 0.0 };
            Mac::random(q, outputs, sparsity, &mut rng).unwrap()
        })
        .collect()
}

fn point_ensemble(seed: u64) -> Vec<PointChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ENSEMBLE)
        .map(|k| {
            let q = if k % 2 == 0 { 2 } else { 3 };
            let outputs = rng.gen_range(2..=5);
            PointChannel::random(q, outputs, 0.0, &mut rng).unwrap()
        })
        .collect()
}

fn minus_plus(p: &Mac) -> (Mac, Mac) {
    let s = Synthesizer::default();
    (s.mac_minus(p).unwrap(), s.mac_plus(p).unwrap())
}

fn martingale() -> Outcome {
    let mut worst = 0.0f64;
    for p in mac_ensemble(1) {
        let (m, pl) = minus_plus(&p);
        let gap = info_triple(&m).i12 + info_triple(&pl).i12 - 2.0 * info_triple(&p).i12;
        worst = worst.max(gap.abs());
    }
    check(worst < TOL, format!("max |gap| = {worst:.2e}"))
}

fn supermartingale() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let coords: [fn(&InfoTriple) -> f64; 3] = [|t| t.i1, |t| t.i2, |t| t.i12];
    for p in mac_ensemble(1) {
        let (m, pl) = minus_plus(&p);
        let (t, tm, tp) = (info_triple(&p), info_triple(&m), info_triple(&pl));
        for (k, c) in coords.iter().enumerate() {
            if k < 2 {
                worst = worst.max(c(&tm) + c(&tp) - 2.0 * c(&t));
            }
            worst = worst.max(c(&tm) - c(&t));
            worst = worst.max(c(&t) - c(&tp));
        }
    }
    check(worst <= TOL, format!("max violation = {worst:.2e}"))
}

fn z_checks(ch: &PointChannel, worst: &mut f64) {
    let s = Synthesizer::default();
    let q = ch.q() as f64;
    let z = bhattacharyya(ch);
    let zb = bhattacharyya(&s.point_b(ch).unwrap());
    let zg = bhattacharyya(&s.point_g(ch).unwrap());
    *worst = worst
        .max(zb - 2.0 * z)
        .max(zg - q * z * z)
        .max(ml_error_prob(ch) - q * z);
}

fn bhattacharyya_bounds() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for ch in point_ensemble(2) {
        z_checks(&ch, &mut worst);
    }
    let mut count = 0;
    for p in mac_ensemble(1) {
        for (a, g) in linear_coefficients(p.q()) {
            z_checks(&linear_channel(&p, a, g).unwrap(), &mut worst);
            count += 1;
        }
    }
    check(
        worst <= TOL,
        format!("{count} linear marginals, max violation = {worst:.2e}"),
    )
}

fn appendix_structure() -> Outcome {
    let s = Synthesizer::default();
    let mut mismatches = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for p in mac_ensemble(1) {
        let (m, pl) = minus_plus(&p);
        for (a, g) in linear_coefficients(p.q()) {
            let lin = linear_channel(&p, a, g).unwrap();
            let b = s.point_b(&lin).unwrap();
            if !b.equivalent(&linear_channel(&m, a, g).unwrap()) {
                mismatches += 1;
            }
            let gi = point_info(&s.point_g(&lin).unwrap());
            worst = worst.max(gi - point_info(&linear_channel(&pl, a, g).unwrap()));
            count += 1;
        }
    }
    check(
        mismatches == 0 && worst <= TOL,
        format!("{count} pairs, {mismatches} inequivalent, max info excess = {worst:.2e}"),
    )
}

fn z_concavity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..ENSEMBLE {
        let q = if k % 2 == 0 { 2 } else { 3 };
        let outputs = rng.gen_range(2..=5);
        let parts: Vec<PointChannel> = (0..rng.gen_range(2..=4))
            .map(|_| PointChannel::random(q, outputs, 0.2, &mut rng).unwrap())
            .collect();
        let raw: Vec<f64> = parts.iter().map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let weighted: Vec<(f64, &PointChannel)> =
            raw.iter().map(|w| w / total).zip(&parts).collect();
        let mix = PointChannel::mixture(&weighted).unwrap();
        let avg: f64 = weighted.iter().map(|(w, c)| w * bhattacharyya(c)).sum();
        worst = worst.max(avg - bhattacharyya(&mix));
    }
    check(worst < TOL, format!("max violation = {worst:.2e}"))
}

fn conservation() -> Outcome {
    let start = Instant::now();
    let mac = Mac::adder(2, 0.0).unwrap();
    let r = polarize_exact(&mac, 8, &Synthesizer::default()).map_err(|e| e.to_string())?;
    let mean = r.mean_triple().i12;
    let secs = start.elapsed().as_secs_f64();
    check(
        (mean - 1.5).abs() < 1e-6 && secs < 600.0,
        format!("mean i12 = {mean:.12}"),
    )
}

fn polarization_trend() -> Outcome {
    let mac = Mac::adder(2, 0.0).unwrap();
    let s = Synthesizer::default();
    let f: Vec<f64> = [4, 6, 8]
        .iter()
        .map(|&d| {
            polarize_exact(&mac, d, &s)
                .unwrap()
                .unpolarized_fraction(0.25)
        })
        .collect();
    check(
        f[0] > f[1] && f[1] > f[2],
        format!(
            "fractions at depth 4/6/8 = {:.4} / {:.4} / {:.4}",
            f[0], f[1], f[2]
        ),
    )
}

fn open_spec(q: usize, depth: usize) -> CodeSpec {
    let n = 1 << depth;
    CodeSpec {
        q,
        n,
        depth,
        a_u: (1..=n).collect(),
        a_v: (1..=n).collect(),
        frozen_u: BTreeMap::new(),
        frozen_v: BTreeMap::new(),
        lambda: 0.5,
        epsilon: 0.1,
        seed: 0,
        mode: Mode::Exact,
        pe_threshold: 1e-3,
        union_bound: 0.0,
        union_bound_exact: true,
        reliability: Vec::new(),
    }
}

fn digits(mut k: usize, base: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for slot in d.iter_mut().rev() {
        *slot = k % base;
        k /= base;
    }
    d
}

fn block_likelihood(mac: &Mac, u: &[usize], v: &[usize], y: &[usize]) -> f64 {
    let f = mac.field();
    let x = polar_encode(u, f).unwrap();
    let w = polar_encode(v, f).unwrap();
    (0..y.len()).map(|j| mac.prob(y[j], x[j], w[j])).product()
}

/// Channel seen by index `i` (0-based): input `(u_i, v_i)`, output
/// `(y, u_<i, v_<i)`, built by summing over every source vector.
fn composite_channel(mac: &Mac, n: usize, i: usize) -> Mac {
    let q = mac.q();
    let ys = mac.outputs().pow(n as u32);
    let prefixes = q.pow(i as u32);
    let scale = (q as f64).powi(-2 * (n as i32 - 1));
    let mut rows = vec![vec![0.0; ys * prefixes * prefixes]; q * q];
    for su in 0..q.pow(n as u32) {
        let u = digits(su, q, n);
        for sv in 0..q.pow(n as u32) {
            let v = digits(sv, q, n);
            let pu = u[..i].iter().fold(0, |a, &s| a * q + s);
            let pv = v[..i].iter().fold(0, |a, &s| a * q + s);
            let row = &mut rows[u[i] * q + v[i]];
            for sy in 0..ys {
                let y = digits(sy, mac.outputs(), n);
                row[(sy * prefixes + pu) * prefixes + pv] +=
                    scale * block_likelihood(mac, &u, &v, &y);
            }
        }
    }
    Mac::from_rows(q, &rows).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let (depth, n, q) = (2, 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut post_err = 0.0f64;
    let mut info_err = 0.0f64;
    for _ in 0..20 {
        let mac = Mac::adder(2, rng.gen_range(0.01..0.4)).unwrap();
        let spec = open_spec(q, depth);
        let mut dec = JointDecoder::new(&spec, &mac).unwrap();
        for _ in 0..4 {
            let u: Vec<usize> = (0..n).map(|_| rng.gen_range(0..q)).collect();
            let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..q)).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..mac.outputs())).collect();
            let got = dec.posteriors(&y, Some((&u, &v))).unwrap();
            for i in 0..n {
                let mut brute = vec![0.0; q * q];
                for su in 0..q.pow(n as u32) {
                    let uu = digits(su, q, n);
                    for sv in 0..q.pow(n as u32) {
                        let vv = digits(sv, q, n);
                        if uu[..i] == u[..i] && vv[..i] == v[..i] {
                            brute[uu[i] * q + vv[i]] += block_likelihood(&mac, &uu, &vv, &y);
                        }
                    }
                }
                let total: f64 = brute.iter().sum();
                for (a, b) in got[i].iter().zip(&brute) {
                    post_err = post_err.max((a - b / total).abs());
                }
            }
        }
        let s = Synthesizer::default();
        for i in 0..n {
            let path = TransformPath::from_index(i + 1, depth).unwrap();
            let t = info_triple(&s.synthesize_path(&mac, &path).unwrap());
            let b = info_triple(&composite_channel(&mac, n, i));
            info_err = info_err.max(t.distance(&b));
        }
    }
    check(
        post_err < TOL && info_err < TOL,
        format!("max posterior error = {post_err:.2e}, max triple error = {info_err:.2e}"),
    )
}

fn mc_params(trials: u64, seed: u64) -> MonteCarloEstimator {
    MonteCarloEstimator { trials, seed }
}

fn end_to_end() -> Outcome {
    let mac = Mac::adder(2, 0.05).unwrap();
    let params = SchemeParams {
        construct: ConstructParams {
            epsilon: 0.1,
            seed: 11,
            ..Default::default()
        },
        ..Default::default()
    };
    let code = JointScheme
        .construct(&mac, 8, &mc_params(50_000, 11), &params)
        .map_err(|e| e.to_string())?;
    let r = JointScheme
        .simulate(&code, &mac, 1000, 12)
        .map_err(|e| e.to_string())?;
    let (r1, r2) = code.rates();
    check(
        r.within_bound(3.0) && r.first_error_mismatches == 0,
        format!(
            "rates {r1:.4}+{r2:.4}, bler = {:.4} (half-width {:.4}), union bound = {:.4}, first-error mismatches = {}",
            r.bler.estimate,
            r.bler.half_width(),
            r.union_bound,
            r.first_error_mismatches
        ),
    )
}

fn corner_point() -> Outcome {
    let mac = Mac::adder(2, 0.02).unwrap();
    let cap = point_info(&marginal_channel(&mac, Marginal::U))
        + point_info(&marginal_channel(&mac, Marginal::VGivenU));
    let params = SchemeParams::default();
    let mut rates = Vec::new();
    let mut detail = Vec::new();
    let mut sims_ok = true;
    for depth in [6, 7, 8] {
        let code = CornerScheme
            .construct(&mac, depth, &mc_params(50_000, 21), &params)
            .map_err(|e| e.to_string())?;
        let CodeArtifact::Corner(c) = &code else {
            return Err("corner scheme returned a joint code".into());
        };
        let r = CornerScheme
            .simulate(&code, &mac, 1000, 22)
            .map_err(|e| e.to_string())?;
        sims_ok &= r.within_bound(3.0);
        rates.push(c.rate_sum());
        detail.push(format!(
            "depth {depth}: rate {:.4}, bler {:.4}, bound {:.4}",
            c.rate_sum(),
            r.bler.estimate,
            r.union_bound
        ));
    }
    let increasing = rates.windows(2).all(|w| w[0] < w[1]);
    let bounded = rates.iter().all(|&r| r <= cap + TOL);
    check(
        increasing && bounded && sims_ok,
        format!("I(Q1)+I(Q2) = {cap:.4}; {}", detail.join("; ")),
    )
}

fn run_cli(args: &[&str], out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_macpolar"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ))
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 7] = [
        &["polarize", "--depth", "4"],
        &[
            "polarize", "--flip", "0.05", "--depth", "5", "--mode", "mc", "--trials", "3000",
            "--seed", "4", "--format", "json",
        ],
        &[
            "construct",
            "--depth",
            "6",
            "--epsilon",
            "0.15",
            "--seed",
            "9",
        ],
        &[
            "construct",
            "--flip",
            "0.05",
            "--depth",
            "5",
            "--mode",
            "mc",
            "--trials",
            "2000",
            "--scheme",
            "corner",
        ],
        &[
            "simulate",
            "--flip",
            "0.05",
            "--depth",
            "5",
            "--mode",
            "mc",
            "--trials",
            "2000",
            "--sim-trials",
            "700",
            "--seed",
            "3",
        ],
        &[
            "simulate", "--q", "3", "--flip", "0.02", "--depth", "3", "--scheme", "corner",
            "--trials", "600", "--format", "json",
        ],
        &["region", "--channel", "adder", "--flip", "0.1"],
    ];
    let mut compared = 0;
    for (k, args) in commands.iter().enumerate() {
        let runs: Vec<_> = [(1, "a"), (4, "b"), (1, "c")]
            .iter()
            .map(|&(threads, tag)| {
                let dir = tmp.path().join(format!("{k}{tag}"));
                run_cli(args, &dir, threads).map(|_| snapshot(&dir))
            })
            .collect::<Result<_, _>>()?;
        if runs[0].is_empty() || runs.iter().any(|r| r != &runs[0]) {
            return Err(format!("outputs differ for {args:?}"));
        }
        compared += runs[0].len();
    }
    Ok(format!(
        "{} commands, {compared} files identical across 3 runs with 1 and 4 workers",
        commands.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("sum-rate martingale", martingale),
        ("single-user supermartingale and sandwich", supermartingale),
        (
            "Bhattacharyya evolution and error bound",
            bhattacharyya_bounds,
        ),
        ("linear-combination channel structure", appendix_structure),
        ("Bhattacharyya concavity", z_concavity),
        ("conservation at depth 8", conservation),
        ("polarization trend", polarization_trend),
        ("decoder and synthesis oracle at n=4", oracle_equivalence),
        ("end-to-end union bound", end_to_end),
        ("corner-point scheme", corner_point),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS {name}: {d} [{secs:.1}s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {d} [{secs:.1}s]", k + 1)
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
