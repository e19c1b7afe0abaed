//! The experiments, their options and their CSV layouts.

use heislab::group::{ball_sizes, DEFAULT_BALL_CAP};
use heislab::oracle::{collision_rows, dyadic_uniformity, table_cap};
use heislab::paths::intersection_tails;
use heislab::percolation::{effective_resistance, path_flow, percolate_box, resistance_profile, Lattice, Site};
use heislab::reference::{
    srw_mutual_intersections, srw_return_profile, theta_d_estimate, zd_collision_probability, zd_eit_tail,
    MAX_DIM, SRW_TIME_CAP, ZD_LENGTH_CAP,
};
use heislab::spectral::fourier_row;
use serde_json::{json, Value};

use crate::claims::{fit_claim, FitReport, Manifest};
use crate::config::{in_range, key, strictly_increasing, under_cap, KeySpec, Settings};
use crate::error::CliError;

/// Largest `k` accepted by the Fourier experiment.
pub const FOURIER_K_CAP: u64 = 1 << 14;
/// Largest horizon accepted by the Monte Carlo experiments.
pub const HORIZON_CAP: u64 = 1 << 16;

pub struct Experiment {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [KeySpec],
    pub header: &'static [&'static str],
    pub run: fn(&Settings, &Manifest) -> Result<Output, CliError>,
}

/// Rows in CSV order plus the fits and any extra diagnostics.
pub struct Output {
    pub rows: Vec<Vec<Value>>,
    pub fits: Vec<FitReport>,
    pub diagnostics: Value,
}

impl Output {
    fn new(rows: Vec<Vec<Value>>) -> Self {
        Output {
            rows,
            fits: Vec::new(),
            diagnostics: Value::Null,
        }
    }
}

/// A float as JSON; non-finite values become the strings `inf`, `-inf`, `nan`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn ln(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|x| x.ln()).collect()
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "collision-exact",
        about: "Exact collision and match probabilities of two oriented walks",
        keys: &[key("k-list", Some("32,64,128,256"), "comma-separated walk lengths")],
        header: &["k", "p_collision", "p_count_match", "p_weighted_match", "max_point_mass"],
        run: collision_exact,
    },
    Experiment {
        name: "fourier",
        about: "Cosine-product integrals and their head/tail split",
        keys: &[key("k-list", Some("16,64,256,1024"), "comma-separated k values")],
        header: &["k", "integral", "head", "tail", "k32_scaled"],
        run: fourier,
    },
    Experiment {
        name: "zd-collision",
        about: "Exact collision probability of two oriented walks on Z^d",
        keys: &[
            key("d", Some("4"), "dimension"),
            key("k-list", Some("16,32,64,128"), "comma-separated walk lengths"),
        ],
        header: &["d", "k", "p_collision"],
        run: zd_collision,
    },
    Experiment {
        name: "eit-tail",
        about: "Survivor functions of shared edges and shared vertices of two oriented walks",
        keys: &[
            key("horizon", Some("4096"), "walk length"),
            key("samples", Some("100000"), "number of pairs"),
            key("fit-max", Some("10"), "largest n in the linearity fit"),
        ],
        header: &[
            "n",
            "edge_count",
            "edge_survivor",
            "edge_std_error",
            "vertex_count",
            "vertex_survivor",
            "vertex_std_error",
        ],
        run: eit_tail,
    },
    Experiment {
        name: "theta-d",
        about: "Return probability of the difference walk of two oriented walks on Z^d",
        keys: &[
            key("d", Some("4"), "dimension (4..=16)"),
            key("horizon", Some("1024"), "walk length"),
            key("samples", Some("100000"), "number of pairs"),
        ],
        header: &[
            "d",
            "horizon",
            "samples",
            "theta_hat",
            "std_error",
            "ci_low",
            "ci_high",
            "implied_vertex_ratio",
            "implied_edge_ratio",
            "observed_edge_ratio",
        ],
        run: theta_d,
    },
    Experiment {
        name: "srw-return",
        about: "Exact return probabilities of simple random walk on the Heisenberg group",
        keys: &[key("n-max", Some("96"), "largest time")],
        header: &["n", "p_return"],
        run: srw_return,
    },
    Experiment {
        name: "srw-intersections",
        about: "Mean number of common vertices in the ranges of two simple random walks",
        keys: &[
            key("n", Some("64"), "first checkpoint"),
            key("levels", Some("5"), "number of doubling checkpoints"),
            key("samples", Some("1000"), "number of pairs"),
        ],
        header: &["time", "mean", "std_error"],
        run: srw_intersections,
    },
    Experiment {
        name: "ball-growth",
        about: "Sphere and ball sizes of the Heisenberg Cayley graph",
        keys: &[key("radius", Some("32"), "largest radius")],
        header: &["r", "sphere_size", "ball_size"],
        run: ball_growth,
    },
    Experiment {
        name: "resistance",
        about: "Effective resistance from the origin to spheres of increasing radius under percolation",
        keys: &[
            key("lattice", Some("heisenberg"), "heisenberg, z1, z2, z3 or z4"),
            key("p", Some("1"), "edge retention probability"),
            key("radii", Some("4,8,12,16"), "strictly increasing radii"),
            key("seeds", Some("1,2,3,4,5"), "percolation seeds"),
        ],
        header: &["seed", "radius", "resistance", "cluster_size", "iterations"],
        run: resistance,
    },
    Experiment {
        name: "path-energy",
        about: "Energy of the averaged flow along open oriented paths, with the resistance of the same box",
        keys: &[
            key("p", Some("0.95"), "edge retention probability"),
            key("num-paths", Some("100000"), "paths sampled per radius"),
            key("radii", Some("4,8,12,16"), "strictly increasing radii"),
        ],
        header: &["radius", "energy", "surviving", "resistance", "thomson_holds"],
        run: path_energy,
    },
    Experiment {
        name: "dyadic",
        about: "Law of the dyadic sub-sum of the weighted sum",
        keys: &[key("k-list", Some("4,8,16,31,256,1000"), "comma-separated walk lengths")],
        header: &["k", "support_size", "is_uniform", "meets_lower_bound"],
        run: dyadic,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

fn collision_exact(s: &Settings, m: &Manifest) -> Result<Output, CliError> {
    let ks: Vec<usize> = s.list("k-list")?;
    in_range("k-list", &ks, 1, usize::MAX)?;
    under_cap("walk length k", &ks.iter().map(|&k| k as u64).collect::<Vec<_>>(), table_cap() as u64)?;
    let rows = collision_rows(&ks)?;
    let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let mut out = Output::new(
        rows.iter()
            .map(|r| {
                vec![
                    json!(r.k),
                    num(r.p_collision),
                    num(r.p_count_match),
                    num(r.p_weighted_match),
                    num(r.max_point_mass),
                ]
            })
            .collect(),
    );
    let series: [(&str, Vec<f64>); 3] = [
        ("gh-collision-exponent", rows.iter().map(|r| r.p_collision).collect()),
        ("conditional-match-exponent", rows.iter().map(|r| r.p_conditional_match).collect()),
        ("count-match-exponent", rows.iter().map(|r| r.p_count_match).collect()),
    ];
    for (id, ys) in series {
        out.fits.extend(fit_claim(m, id, &kx, &ln(&kx), &ln(&ys)));
    }
    out.diagnostics = json!({
        "p_conditional_match": rows.iter().map(|r| num(r.p_conditional_match)).collect::<Vec<_>>(),
        "argmax_weight": rows.iter().map(|r| r.argmax_weight).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn fourier(s: &Settings, m: &Manifest) -> Result<Output, CliError> {
    let ks: Vec<usize> = s.list("k-list")?;
    in_range("k-list", &ks, 1, usize::MAX)?;
    under_cap("Fourier k", &ks.iter().map(|&k| k as u64).collect::<Vec<_>>(), FOURIER_K_CAP)?;
    let rows = ks.iter().map(|&k| fourier_row(k)).collect::<Result<Vec<_>, _>>()?;
    let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.integral).collect();
    let mut out = Output::new(
        rows.iter()
            .map(|r| vec![json!(r.k), num(r.integral), num(r.head), num(r.tail), num(r.k32_scaled)])
            .collect(),
    );
    out.fits.extend(fit_claim(m, "fourier-three-halves", &kx, &ln(&kx), &ln(&ys)));
    out.diagnostics = json!({
        "abs_error_estimate": rows.iter().map(|r| num(r.abs_error_estimate)).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn zd_collision(s: &Settings, m: &Manifest) -> Result<Output, CliError> {
    let d: usize = s.parse("d")?;
    in_range("d", &[d], 1, MAX_DIM)?;
    let ks: Vec<usize> = s.list("k-list")?;
    in_range("k-list", &ks, 1, usize::MAX)?;
    under_cap("walk length k", &ks.iter().map(|&k| k as u64).collect::<Vec<_>>(), ZD_LENGTH_CAP as u64)?;
    let ps = ks
        .iter()
        .map(|&k| zd_collision_probability(d, k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Output::new(
        ks.iter()
            .zip(&ps)
            .map(|(&k, &p)| vec![json!(d), json!(k), num(p)])
            .collect(),
    );
    if d == 4 {
        let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        out.fits.extend(fit_claim(m, "z4-collision-exponent", &kx, &ln(&kx), &ln(&ps)));
    }
    Ok(out)
}

fn eit_tail(s: &Settings, m: &Manifest) -> Result<Output, CliError> {
    let horizon: u64 = s.parse("horizon")?;
    let samples: u64 = s.parse("samples")?;
    let fit_max: usize = s.parse("fit-max")?;
    in_range("horizon", &[horizon], 1, u64::MAX)?;
    in_range("samples", &[samples], 2, u64::MAX)?;
    in_range("fit-max", &[fit_max], 2, usize::MAX)?;
    under_cap("horizon", &[horizon], HORIZON_CAP)?;
    let tails = intersection_tails(horizon as usize, samples, s.seed()?)?;
    let (e, v) = (&tails.edges, &tails.vertices);
    let len = e.counts.len().max(v.counts.len());
    let survivor = |c: u64| c as f64 / samples as f64;
    let se = |t: &heislab::paths::TailEstimate, n: usize| t.std_errors.get(n).copied().unwrap_or(0.0);
    let rows = (0..len)
        .map(|n| {
            vec![
                json!(n),
                json!(e.count(n)),
                num(survivor(e.count(n))),
                num(se(e, n)),
                json!(v.count(n)),
                num(survivor(v.count(n))),
                num(se(v, n)),
            ]
        })
        .collect();
    let mut out = Output::new(rows);
    let ns: Vec<f64> = (1..=fit_max).map(|n| n as f64).collect();
    let ys: Vec<f64> = (1..=fit_max).map(|n| (e.count(n) as f64).ln()).collect();
    out.fits.extend(fit_claim(m, "eit-tail-linearity", &ns, &ns, &ys));
    let memo = e.memorylessness(3.0);
    out.diagnostics = json!({
        "edge_theta_hat": e.theta_hat.map(num),
        "edge_theta_std_error": e.theta_std_error.map(num),
        "edge_fit_range": e.fit_range,
        "vertex_theta_hat": v.theta_hat.map(num),
        "censoring_bound": num(e.censoring_bound),
        "memorylessness": memo,
    });
    Ok(out)
}

fn theta_d(s: &Settings, _m: &Manifest) -> Result<Output, CliError> {
    let d: usize = s.parse("d")?;
    let horizon: u64 = s.parse("horizon")?;
    let samples: u64 = s.parse("samples")?;
    in_range("d", &[d], 4, MAX_DIM)?;
    in_range("horizon", &[horizon], 1, u64::MAX)?;
    in_range("samples", &[samples], 2, u64::MAX)?;
    under_cap("horizon", &[horizon], HORIZON_CAP)?;
    let seed = s.seed()?;
    let est = theta_d_estimate(d, horizon as usize, samples, seed)?;
    // The tail runs on its own streams so the two estimates are independent.
    let tail = zd_eit_tail(d, horizon as usize, samples, seed.wrapping_add(1))?;
    let memo = tail.edges.memorylessness(3.0);
    let row = vec![
        json!(d),
        json!(horizon),
        json!(samples),
        num(est.theta_hat),
        num(est.std_error),
        num(est.ci95.0),
        num(est.ci95.1),
        num(est.implied_vertex_ratio()),
        num(est.implied_edge_ratio()),
        num(memo.pooled),
    ];
    let mut out = Output::new(vec![row]);
    out.diagnostics = json!({
        "censoring_bound": est.censoring_bound.map(num),
        "edge_memorylessness": memo,
    });
    Ok(out)
}

fn srw_return(s: &Settings, m: &Manifest) -> Result<Output, CliError> {
    let n_max: u64 = s.parse("n-max")?;
    in_range("n-max", &[n_max], 2, u64::MAX)?;
    under_cap("return time n", &[n_max], SRW_TIME_CAP as u64)?;
    let profile = srw_return_profile(n_max as usize)?;
    let mut out = Output::new(
        profile
            .probabilities
            .iter()
            .enumerate()
            .map(|(n, &p)| vec![json!(n), num(p)])
            .collect(),
    );
    let half = n_max as usize / 2;
    let lo = if half >= 9 { 8 } else { 1 };
    let ms: Vec<f64> = (lo..=half).map(|m| m as f64).collect();
    let ps: Vec<f64> = (lo..=half).map(|m| profile.probabilities[2 * m]).collect();
    out.fits.extend(fit_claim(m, "srw-return-exponent", &ms, &ln(&ms), &ln(&ps)));
    out.diagnostics = json!({ "max_mass_error": num(profile.max_mass_error) });
    Ok(out)
}

fn srw_intersections(s: &Settings, _m: &Manifest) -> Result<Output, CliError> {
    let n: u64 = s.parse("n")?;
    let levels: u32 = s.parse("levels")?;
    let samples: u64 = s.parse("samples")?;
    in_range("n", &[n], 1, u64::MAX)?;
    in_range("levels", &[levels], 1, 24)?;
    in_range("samples", &[samples], 2, u64::MAX)?;
    under_cap("walk length", &[n << (levels - 1)], 1 << 22)?;
    let rows = srw_mutual_intersections(n as usize, levels as usize, samples, s.seed()?)?;
    Ok(Output::new(
        rows.iter()
            .map(|r| vec![json!(r.time), num(r.mean), num(r.std_error)])
            .collect(),
    ))
}

fn ball_growth(s: &Settings, m: &Manifest) -> Result<Output, CliError> {
    let radius: u32 = s.parse("radius")?;
    in_range("radius", &[radius], 1, u32::MAX)?;
    under_cap("ball radius", &[radius as u64], DEFAULT_BALL_CAP as u64)?;
    let balls = ball_sizes(radius)?;
    let mut out = Output::new(
        balls
            .iter()
            .enumerate()
            .map(|(r, &b)| {
                let sphere = if r == 0 { b } else { b - balls[r - 1] };
                vec![json!(r), json!(sphere), json!(b)]
            })
            .collect(),
    );
    let lo = if radius >= 9 { 8 } else { 1 };
    let rs: Vec<f64> = (lo..=radius as usize).map(|r| r as f64).collect();
    let vs: Vec<f64> = (lo..=radius as usize).map(|r| balls[r] as f64).collect();
    out.fits.extend(fit_claim(m, "ball-growth-exponent", &rs, &ln(&rs), &ln(&vs)));
    Ok(out)
}

fn resistance(s: &Settings, m: &Manifest) -> Result<Output, CliError> {
    let lattice = s.lattice("lattice")?;
    let p = s.probability("p")?;
    let radii: Vec<u32> = s.list("radii")?;
    let seeds: Vec<u64> = s.list("seeds")?;
    in_range("radii", &radii, 1, u32::MAX)?;
    strictly_increasing("radii", &radii)?;
    if lattice == Lattice::Heisenberg {
        under_cap("ball radius", &[*radii.last().unwrap() as u64], DEFAULT_BALL_CAP as u64)?;
    }
    let prof = resistance_profile(lattice, p, &radii, &seeds)?;
    let mut rows = Vec::new();
    for sp in &prof.per_seed {
        for e in &sp.entries {
            rows.push(vec![
                json!(sp.seed.to_string()),
                json!(e.radius),
                num(e.resistance.as_f64()),
                json!(e.cluster_size),
                json!(e.iterations),
            ]);
        }
    }
    for me in &prof.mean {
        rows.push(vec![
            json!("mean"),
            json!(me.radius),
            me.resistance.map_or(json!("inf"), num),
            num(me.mean_cluster_size),
            Value::Null,
        ]);
    }
    let mut out = Output::new(rows);
    if lattice == Lattice::Cubic(2) {
        if let Some(rs) = prof.mean.iter().map(|e| e.resistance).collect::<Option<Vec<f64>>>() {
            let xs: Vec<f64> = radii.iter().map(|&r| r as f64).collect();
            out.fits.extend(fit_claim(m, "z2-resistance-log-slope", &xs, &ln(&xs), &rs));
        }
    }
    out.diagnostics = json!({
        "lattice": lattice.to_string(),
        "box_size": prof.box_size,
        "increments": prof.increments().map(|v| v.into_iter().map(num).collect::<Vec<_>>()),
        "strictly_decreasing_increments": prof.has_strictly_decreasing_increments(),
    });
    Ok(out)
}

fn path_energy(s: &Settings, _m: &Manifest) -> Result<Output, CliError> {
    let p = s.probability("p")?;
    let num_paths: u64 = s.parse("num-paths")?;
    let radii: Vec<u32> = s.list("radii")?;
    in_range("num-paths", &[num_paths], 1, u64::MAX)?;
    in_range("radii", &radii, 1, u32::MAX)?;
    strictly_increasing("radii", &radii)?;
    under_cap("ball radius", &[*radii.last().unwrap() as u64], DEFAULT_BALL_CAP as u64)?;
    let seed = s.seed()?;
    let mut rows = Vec::new();
    let mut energies = Vec::new();
    for &r in &radii {
        let mask = percolate_box(Lattice::Heisenberg, r, p, seed)?;
        let flow = path_flow(&mask, num_paths, seed)?;
        let reff = effective_resistance(&mask, Site::ORIGIN, r)?.as_f64();
        let energy = flow.energy();
        energies.push(energy);
        rows.push(vec![
            json!(r),
            energy.map_or(json!("none"), num),
            json!(flow.surviving),
            num(reff),
            energy.map_or(json!("na"), |e| json!(reff <= e)),
        ]);
    }
    let mut out = Output::new(rows);
    let increments: Option<Vec<f64>> = energies
        .iter()
        .copied()
        .collect::<Option<Vec<f64>>>()
        .map(|e| e.windows(2).map(|w| w[1] - w[0]).collect());
    out.diagnostics = json!({
        "energy_increments": increments.as_ref().map(|v| v.iter().copied().map(num).collect::<Vec<_>>()),
        "increments_decreasing": increments.map(|v| v.windows(2).all(|w| w[1] < w[0])),
    });
    Ok(out)
}

fn dyadic(s: &Settings, _m: &Manifest) -> Result<Output, CliError> {
    let ks: Vec<usize> = s.list("k-list")?;
    in_range("k-list", &ks, 2, usize::MAX)?;
    under_cap("walk length k", &ks.iter().map(|&k| k as u64).collect::<Vec<_>>(), 1 << 24)?;
    let laws = ks.iter().map(|&k| dyadic_uniformity(k)).collect::<Result<Vec<_>, _>>()?;
    Ok(Output::new(
        laws.iter()
            .map(|l| vec![json!(l.k), json!(l.support_size), json!(l.is_uniform), json!(l.meets_lower_bound)])
            .collect(),
    ))
}
