//! The spec-driven subcommands: curve, entropy, bound, ratio, simulate.

use num_traits::{One, Zero};
use serde_json::Value;

use thermoflux::arith::Scalar;
use thermoflux::divergence::{
    d0_exp, d0_smooth_fractional_exp, d0_smooth_integral_exp, smooth,
};
use thermoflux::majorization::majorization_curve;
use thermoflux::process::{
    build_transition_currents, epsilon_work_bound, fluctuation_ratio, forward_distribution,
    forward_probability, minimal_integral_scale, reverse_probability, w_delta, Work,
};
use thermoflux::system::BathModel;

use crate::error::{infeasible, Result};
use crate::output::{json_object, json_string, render_curve_svg, render_json, Format, Show};
use crate::spec::Problem;

fn work_report<M: Show>(
    p: &Problem<M>,
    work: &Work<M>,
    source: &str,
    snapped: bool,
    requested: Option<&str>,
) -> Value {
    let mut fields = vec![
        ("factor", json_string(M::show(work.factor()))),
        ("value", json_string(crate::output::fmt_f64(work.value(p.ctx.beta())))),
        ("source", json_string(source)),
        ("snapped", Value::Bool(snapped)),
    ];
    if let Some(r) = requested {
        fields.push(("requested", json_string(r)));
    }
    json_object(fields)
}

/// The requested work, or the epsilon-work bound when none was given.
fn resolve_work<M: Show>(p: &Problem<M>) -> Result<(Work<M>, Value)> {
    match &p.w {
        Some(r) => {
            let report = work_report(p, &r.work, "given", r.snapped, Some(&r.requested));
            Ok((r.work.clone(), report))
        }
        None => {
            let bound =
                epsilon_work_bound(&p.rho, &p.ctx, &p.epsilon).map_err(infeasible)?;
            let report = work_report(p, &bound, "epsilon-work-bound", false, None);
            Ok((bound, report))
        }
    }
}

pub fn curve<M: Show>(p: &Problem<M>, format: Format) -> Result<String> {
    let curve = majorization_curve(&p.rho, &p.ctx).map_err(infeasible)?;
    match format {
        Format::Csv => {
            let mut out = String::from("width,height\n");
            for (w, h) in curve.breakpoints() {
                out.push_str(&format!("{},{}\n", M::show(w), M::show(h)));
            }
            Ok(out)
        }
        Format::Json => {
            let points: Vec<Value> = curve
                .breakpoints()
                .iter()
                .map(|(w, h)| {
                    Value::Array(vec![
                        json_string(M::show(w)),
                        json_string(M::show(h)),
                    ])
                })
                .collect();
            Ok(render_json(&json_object(vec![
                ("mode", json_string(M::NAME)),
                ("breakpoints", Value::Array(points)),
                ("concave", Value::Bool(curve.is_concave())),
            ])))
        }
        Format::Svg => {
            let points: Vec<(f64, f64)> = curve
                .breakpoints()
                .iter()
                .map(|(w, h)| (Scalar::to_f64(w), Scalar::to_f64(h)))
                .collect();
            let z = Scalar::to_f64(p.ctx.partition());
            Ok(render_curve_svg(&points, z))
        }
    }
}

pub fn entropy<M: Show>(p: &Problem<M>) -> Result<String> {
    let support = d0_exp(&p.rho, &p.ctx).map_err(infeasible)?;
    let ln_of = |factor: &M::Scalar| crate::output::fmt_f64(Scalar::to_f64(factor).ln());
    let mut fields = vec![
        ("mode", json_string(M::NAME)),
        ("support_factor", json_string(M::show(&support))),
        ("d0", json_string(ln_of(&support))),
        (
            "d0_textbook",
            json_string(crate::output::fmt_f64(-Scalar::to_f64(&support).ln())),
        ),
    ];
    if p.epsilon > M::Scalar::zero() {
        let frac =
            d0_smooth_fractional_exp(&p.rho, &p.ctx, &p.epsilon).map_err(infeasible)?;
        let whole =
            d0_smooth_integral_exp(&p.rho, &p.ctx, &p.epsilon).map_err(infeasible)?;
        fields.push(("epsilon", json_string(M::show(&p.epsilon))));
        fields.push((
            "fractional",
            json_object(vec![
                ("factor", json_string(M::show(&frac))),
                ("d0", json_string(ln_of(&frac))),
            ]),
        ));
        fields.push((
            "integral",
            json_object(vec![
                ("factor", json_string(M::show(&whole))),
                ("d0", json_string(ln_of(&whole))),
            ]),
        ));
    }
    Ok(render_json(&json_object(fields)))
}

pub fn bound<M: Show>(p: &Problem<M>) -> Result<String> {
    let bound = epsilon_work_bound(&p.rho, &p.ctx, &p.epsilon).map_err(infeasible)?;
    let mut fields = vec![
        ("mode", json_string(M::NAME)),
        ("epsilon", json_string(M::show(&p.epsilon))),
        ("factor", json_string(M::show(bound.factor()))),
        (
            "value",
            json_string(crate::output::fmt_f64(bound.value(p.ctx.beta()))),
        ),
    ];
    if p.delta > M::Scalar::zero() {
        let shifted = w_delta(&bound, &p.delta).map_err(infeasible)?;
        fields.push(("delta", json_string(M::show(&p.delta))));
        fields.push((
            "reverse_effective",
            json_object(vec![
                ("factor", json_string(M::show(shifted.factor()))),
                (
                    "value",
                    json_string(crate::output::fmt_f64(shifted.value(p.ctx.beta()))),
                ),
            ]),
        ));
    }
    Ok(render_json(&json_object(fields)))
}

pub fn ratio<M: Show>(p: &Problem<M>) -> Result<String> {
    let (work, work_json) = resolve_work(p)?;
    let forward = forward_probability::<M::Scalar>(&p.epsilon).map_err(infeasible)?;
    let reverse = reverse_probability(&p.rho, &p.ctx, &work, &p.epsilon, &p.delta)
        .map_err(infeasible)?;
    let ratio = fluctuation_ratio(&p.rho, &p.ctx, &work, &p.epsilon, &p.delta)
        .map_err(infeasible)?;
    Ok(render_json(&json_object(vec![
        ("mode", json_string(M::NAME)),
        ("epsilon", json_string(M::show(&p.epsilon))),
        ("delta", json_string(M::show(&p.delta))),
        ("work", work_json),
        ("forward", json_string(M::show(&forward))),
        (
            "reverse",
            json_object(vec![
                ("probability", json_string(M::show(reverse.probability()))),
                ("feasible", Value::Bool(reverse.is_feasible())),
            ]),
        ),
        ("ratio", json_string(M::show(&ratio))),
    ])))
}

pub fn simulate<M: Show>(p: &Problem<M>) -> Result<String> {
    let smoothing = smooth(&p.rho, &p.ctx, &p.epsilon).map_err(infeasible)?;
    let state = smoothing.smoothed_state();
    let (work, work_json) = match &p.w {
        Some(r) => (
            r.work.clone(),
            work_report(p, &r.work, "given", r.snapped, Some(&r.requested)),
        ),
        None => {
            let det = Work::from_factor(d0_exp(state, &p.ctx).map_err(infeasible)?)
                .map_err(infeasible)?;
            let report = work_report(p, &det, "deterministic", false, None);
            (det, report)
        }
    };
    let base = BathModel::new(p.ctx.beta().clone(), p.reference_degeneracy.clone())
        .map_err(infeasible)?;
    let scale =
        minimal_integral_scale(state, &p.ctx, &base, &work).map_err(infeasible)?;
    let bath = if scale == M::Scalar::one() {
        base
    } else {
        base.scaled(&scale).map_err(infeasible)?
    };
    let currents =
        build_transition_currents(state, &p.ctx, &bath, &work).map_err(infeasible)?;
    let outcome =
        forward_distribution(&currents, state, &p.ctx, &bath).map_err(infeasible)?;
    let reverse = reverse_probability(&p.rho, &p.ctx, &work, &p.epsilon, &p.delta)
        .map_err(infeasible)?;

    let energies = |levels: &[usize]| -> Value {
        Value::Array(
            levels
                .iter()
                .map(|&l| {
                    json_string(format!("{}", p.ctx.spectrum().energy(l)))
                })
                .collect(),
        )
    };
    let matrix: Vec<Value> = currents
        .entries()
        .iter()
        .map(|row| {
            Value::Array(row.iter().map(|v| json_string(M::show(v))).collect())
        })
        .collect();
    let distribution: Vec<Value> = outcome
        .distribution()
        .entries()
        .iter()
        .map(|(w, prob)| {
            json_object(vec![
                ("work_factor", json_string(M::show(w.factor()))),
                (
                    "work_value",
                    json_string(crate::output::fmt_f64(w.value(p.ctx.beta()))),
                ),
                ("probability", json_string(M::show(prob))),
            ])
        })
        .collect();
    let final_probs: Vec<Value> = outcome
        .final_state()
        .probs()
        .iter()
        .map(|q| json_string(M::show(q)))
        .collect();

    Ok(render_json(&json_object(vec![
        ("mode", json_string(M::NAME)),
        ("epsilon", json_string(M::show(&p.epsilon))),
        ("delta", json_string(M::show(&p.delta))),
        (
            "smoothing",
            json_object(vec![
                (
                    "kept_levels",
                    Value::Array(
                        state
                            .support()
                            .iter()
                            .map(|&l| Value::from(l as u64))
                            .collect(),
                    ),
                ),
                (
                    "removed_mass",
                    json_string(M::show(
                        &(p.rho.total_mass() - state.total_mass()),
                    )),
                ),
            ]),
        ),
        ("work", work_json),
        (
            "bath",
            json_object(vec![
                (
                    "reference_degeneracy",
                    json_string(M::show(&p.reference_degeneracy)),
                ),
                ("scale_applied", json_string(M::show(&scale))),
            ]),
        ),
        (
            "currents",
            json_object(vec![
                ("row_energies", energies(currents.row_levels())),
                ("col_energies", energies(currents.col_levels())),
                ("matrix", Value::Array(matrix)),
            ]),
        ),
        (
            "distribution",
            json_object(vec![
                ("success", Value::Array(distribution)),
                (
                    "success_mass",
                    json_string(M::show(&outcome.distribution().success_mass())),
                ),
                (
                    "failure",
                    json_string(M::show(outcome.distribution().failure())),
                ),
            ]),
        ),
        ("final_state", Value::Array(final_probs)),
        (
            "reverse",
            json_object(vec![
                ("probability", json_string(M::show(reverse.probability()))),
                ("feasible", Value::Bool(reverse.is_feasible())),
            ]),
        ),
    ])))
}
