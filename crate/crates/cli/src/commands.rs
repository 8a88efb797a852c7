use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use relbelief::discretize::{capped_bayes_refinement, grid_lrse_refinement, region_refinement, ContinuousModel1D};
use relbelief::estimate::predict_lrse;
use relbelief::model::posterior_predictive;
use relbelief::modelfile::{LoadedModel, ModelFile};
use relbelief::region::eta_sweep;
use relbelief::simulate::{format_misclassification_table, misclassification_table, EpsilonLaw};
use relbelief::worked::gaussian_f_ratio;
use relbelief::{
    bayes_rule, hpd_region, lpl_region, lrse, map, rs_region, BetaBernoulliPredictor, BinomialClassifier, FiniteModel, GaussianRegression,
    Likelihood, LossSpec, Method, Observation, SimConfig,
};
use serde_json::json;

use crate::args::*;
use crate::report::{num, opt_num, Output, Table};

/// Bad command-line input that the argument parser cannot catch.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn load(path: &Path, strict: bool) -> Result<LoadedModel> {
    let file = ModelFile::read(path)?;
    let loaded = file.build(strict).with_context(|| format!("model file {}", path.display()))?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(loaded)
}

fn observation(model: &FiniteModel, x: &str) -> Result<Observation> {
    match model.likelihood() {
        Likelihood::Table(_) => x
            .trim()
            .parse::<usize>()
            .map(Observation::Index)
            .map_err(|_| input(format!("--x {x:?} must be a sample-space index for a tabulated model"))),
        Likelihood::Density(_) => x
            .trim()
            .parse::<f64>()
            .map(Observation::Value)
            .map_err(|_| input(format!("--x {x:?} must be a number"))),
    }
}

fn parse_loss(spec: &str) -> Result<LossSpec> {
    if let Some(file) = spec.strip_prefix("weighted:") {
        let text = std::fs::read_to_string(file).with_context(|| format!("reading weights {file}"))?;
        let h = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| input(format!("bad weight {s:?} in {file}"))))
            .collect::<Result<Vec<f64>>>()?;
        let loss = LossSpec::WeightedIndicator { h };
        loss.validate()?;
        return Ok(loss);
    }
    Ok(spec.parse::<LossSpec>()?)
}

fn labels(model: &FiniteModel, members: &[usize]) -> String {
    members
        .iter()
        .map(|&j| model.psi_support()[j].label.as_str())
        .collect::<Vec<_>>()
        .join(";")
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Map => Method::Map,
        MethodArg::Lrse => Method::Lrse,
    }
}

pub fn run(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Estimate(a) => estimate(a),
        Command::Region(a) => region(a),
        Command::Classify(a) => classify(a),
        Command::Predict(PredictCommand::Class(a)) => predict_class(a),
        Command::Predict(PredictCommand::Regression(a)) => predict_regression(a),
        Command::Predict(PredictCommand::Model(a)) => predict_model(a),
        Command::SimulateTable1(a) => simulate(a),
        Command::Converge(a) => converge(a),
        Command::Validate(a) => validate(a),
    }
}

fn estimate(a: &EstimateArgs) -> Result<Output> {
    let loaded = load(&a.model.model, false)?;
    let model = &loaded.model;
    let x = observation(model, &a.model.x)?;
    let tables = model.belief_tables(x)?;
    let (loss_name, result) = match a.estimator {
        Estimator::Lrse => (String::new(), lrse(&tables)),
        Estimator::Map => (String::new(), map(&tables)),
        Estimator::Bayes => {
            let loss = parse_loss(&a.loss)?;
            (loss.to_string(), bayes_rule(&loss, &tables)?)
        }
    };
    let mut t = Table::new(
        "estimate",
        &[
            "estimator",
            "loss",
            "x",
            "psi",
            "psi_index",
            "criterion",
            "tie",
            "argmax_set",
            "truncation_points",
            "truncation_tail_mass",
        ],
    );
    t.push(vec![
        format!("{:?}", a.estimator).to_lowercase(),
        loss_name,
        x.to_string(),
        model.psi_support()[result.psi_index].label.clone(),
        result.psi_index.to_string(),
        num(result.criterion_value),
        result.tie.to_string(),
        labels(model, &result.argmax_set),
        result.truncation.map(|t| t.points.to_string()).unwrap_or_default(),
        opt_num(result.truncation.map(|t| t.tail_mass)),
    ]);
    let mut out = Output::with_table(t).detail(&json!({ "result": result, "tables": tables }))?;
    out.warnings = loaded.warnings;
    Ok(out)
}

fn region(a: &RegionArgs) -> Result<Output> {
    let loaded = load(&a.model.model, false)?;
    let model = &loaded.model;
    let x = observation(model, &a.model.x)?;
    let tables = model.belief_tables(x)?;
    let r = match a.family {
        Family::Hpd => hpd_region(&tables, a.gamma)?,
        Family::Rs => rs_region(&tables, a.gamma)?,
        Family::Lpl => lpl_region(&parse_loss(&a.loss)?, &tables, a.gamma)?,
    };
    let mut t = Table::new(
        "region",
        &["family", "gamma", "members", "threshold", "attained_mass", "support_size"],
    );
    t.push(vec![
        format!("{:?}", a.family).to_lowercase(),
        num(a.gamma),
        labels(model, &r.members),
        num(r.threshold),
        num(r.attained_mass),
        r.support_size.to_string(),
    ]);
    let mut out = Output::with_table(t);
    let mut detail = json!({ "region": r });

    if let Some(spec) = &a.sweep {
        let list = spec
            .strip_prefix("eta=")
            .ok_or_else(|| input(format!("--sweep {spec:?} must look like eta=0.1,0.01")))?;
        let etas = list
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| input(format!("bad eta {s:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        let report = eta_sweep(&tables, a.gamma, &etas)?;
        let mut steps = Table::new("sweep", &["eta", "members", "attained_mass", "equals_rs"]);
        for (eta, reg) in &report.steps {
            steps.push(vec![
                num(*eta),
                labels(model, &reg.members),
                num(reg.attained_mass),
                (reg.members == report.rs_region.members).to_string(),
            ]);
        }
        let mut summary = Table::new(
            "sweep_summary",
            &[
                "gamma",
                "exact_attainment",
                "rs_members",
                "lim_inf",
                "lim_sup",
                "next_members",
                "rs_within_lim_inf",
                "lim_sup_within_next",
                "converged",
            ],
        );
        summary.push(vec![
            num(a.gamma),
            report.exact_attainment.to_string(),
            labels(model, &report.rs_region.members),
            labels(model, &report.lim_inf),
            labels(model, &report.lim_sup),
            report.next_region.as_ref().map(|r| labels(model, &r.members)).unwrap_or_default(),
            report.rs_within_lim_inf.to_string(),
            report.lim_sup_within_next.to_string(),
            report.converged.to_string(),
        ]);
        out.tables.push(steps);
        out.tables.push(summary);
        detail["sweep"] = serde_json::to_value(&report)?;
    }
    out.detail = detail;
    out.warnings = loaded.warnings;
    Ok(out)
}

fn classify(a: &ClassifyArgs) -> Result<Output> {
    let c = BinomialClassifier::new(a.psi1, a.psi2, a.epsilon)?;
    let m = method(a.method);
    let choice = c.classify(a.x, m)?;
    let risks = c.classifier_risks(m)?;
    let mut t = Table::new(
        "classify",
        &[
            "method",
            "x",
            "choice",
            "error_psi1",
            "error_psi2",
            "error_sum",
            "prior_weighted_error",
        ],
    );
    t.push(vec![
        m.to_string(),
        a.x.to_string(),
        choice.to_string(),
        num(risks.per_class_error[0]),
        num(risks.per_class_error[1]),
        num(risks.unweighted_sum),
        num(risks.prior_weighted_sum),
    ]);
    Output::with_table(t).detail(&json!({ "choice": choice, "risks": risks }))
}

fn predict_class(a: &PredictClassArgs) -> Result<Output> {
    let f_ratio = match (a.f_ratio, a.mu, a.x_new) {
        (Some(r), _, _) => r,
        (None, Some(mu), Some(x)) => gaussian_f_ratio(mu, x),
        _ => return Err(input("give --f-ratio, or both --mu and --x-new")),
    };
    let p = BetaBernoulliPredictor::new(a.alpha, a.beta, a.n, a.cbar, f_ratio)?;
    let m = method(a.method);
    let class = p.predict_class(m);
    let mut t = Table::new("predict_class", &["method", "f_ratio", "class"]);
    t.push(vec![m.to_string(), num(f_ratio), class.to_string()]);
    Output::with_table(t).detail(&json!({ "predictor": p, "method": m, "class": class }))
}

fn parse_design(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .filter(|r| !r.trim().is_empty())
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| input(format!("bad design entry {v:?}"))))
                .collect()
        })
        .collect()
}

fn predict_regression(a: &RegressionArgs) -> Result<Output> {
    let rows = parse_design(&a.design)?;
    let r = GaussianRegression::from_rows(&rows, &a.y, &a.w, a.sigma2, a.tau2)?;
    let e = r.regression_estimates()?;
    let z = r.regression_predict()?;
    let mut t = Table::new(
        "regression",
        &[
            "psi_map",
            "psi_lrse",
            "mu_post_psi",
            "var_post_psi",
            "var_prior_psi",
            "z_map",
            "z_lrse",
            "var_post_z",
            "var_prior_z",
        ],
    );
    t.push(vec![
        num(e.psi_map),
        num(e.psi_lrse),
        num(e.mu_post_psi),
        num(e.var_post_psi),
        num(e.var_prior_psi),
        num(z.z_map),
        num(z.z_lrse),
        num(z.var_post_z),
        num(z.var_prior_z),
    ]);
    Output::with_table(t).detail(&json!({ "estimates": e, "prediction": z }))
}

fn predict_model(a: &ModelArgs) -> Result<Output> {
    let loaded = load(&a.model, false)?;
    let kernel = loaded
        .future_kernel
        .as_ref()
        .ok_or_else(|| input(format!("{} has no future_kernel", a.model.display())))?;
    let x = observation(&loaded.model, &a.x)?;
    let post = loaded.model.posterior(x)?;
    let pred = posterior_predictive(&loaded.model, &post, kernel)?;
    let best = predict_lrse(&pred);
    let mut t = Table::new("predictive", &["y", "prior_pred", "post_pred", "rb_pred", "lrse"]);
    for y in 0..pred.prior_pred.len() {
        t.push(vec![
            y.to_string(),
            num(pred.prior_pred[y]),
            num(pred.post_pred[y]),
            num(pred.rb_pred[y]),
            best.argmax_set.contains(&y).to_string(),
        ]);
    }
    let mut out = Output::with_table(t).detail(&json!({ "predictive": pred, "lrse": best }))?;
    out.warnings = loaded.warnings;
    Ok(out)
}

fn simulate(a: &SimulateArgs) -> Result<Output> {
    let law = match a.law {
        LawArg::Prior => EpsilonLaw::Prior,
        LawArg::Conjugate => EpsilonLaw::Conjugate,
    };
    let mut t = Table::new("table1", &["beta", "method", "M0", "M1", "sum", "se", "alpha"]);
    let mut layout = String::new();
    let mut all = Vec::new();
    for &alpha in &a.alphas {
        let base = SimConfig {
            alpha,
            beta: 1.0,
            mu: a.mu,
            n: a.n,
            reps: a.reps,
            seed: a.seed,
            law,
        };
        log::info!(
            "simulating alpha={alpha} over {} beta values, {} reps per cell",
            a.betas.len(),
            a.reps
        );
        let rows = misclassification_table(&base, &a.betas)?;
        for r in &rows {
            t.push(vec![
                num(r.beta),
                r.method.to_string(),
                num(r.m0),
                num(r.m1),
                num(r.sum),
                num(r.se),
                num(alpha),
            ]);
        }
        layout.push_str(&format!("alpha = {alpha}, mu = {}, n = {}, reps = {}\n", a.mu, a.n, a.reps));
        layout.push_str(&format_misclassification_table(&rows));
        all.push(json!({ "alpha": alpha, "rows": rows }));
    }
    eprint!("{layout}");
    let mut out = Output::with_table(t).detail(&all)?;
    out.seed = Some(a.seed);
    out.text.push(("table1.txt".into(), layout));
    Ok(out)
}

fn converge(a: &ConvergeArgs) -> Result<Output> {
    let Testbed::NormalNormal = a.testbed;
    let model = ContinuousModel1D::normal_normal(a.tau, a.sigma)?;
    let target = GaussianRegression::from_rows(&[vec![1.0]], &[a.x], &[1.0], a.sigma * a.sigma, a.tau * a.tau)?
        .regression_estimates()?
        .psi_lrse;
    let bayes = capped_bayes_refinement(&model, a.x, &a.lambdas, target)?;
    let hat = grid_lrse_refinement(&model, a.x, &a.lambdas, target)?;
    let regions = region_refinement(&model, a.x, a.gamma, &a.lambdas, &a.etas)?;

    let mut est = Table::new(
        "estimators",
        &["estimator", "lambda", "eta", "estimate", "target", "error", "within_lambda"],
    );
    for (name, rows) in [("capped-bayes", &bayes), ("grid-lrse", &hat)] {
        for r in rows.iter() {
            est.push(vec![
                name.into(),
                num(r.lambda),
                opt_num(r.eta),
                num(r.estimate),
                num(target),
                num(r.error),
                r.within_lambda.to_string(),
            ]);
        }
    }
    let mut reg = Table::new("regions", &["family", "gamma", "lambda", "eta", "reference_lambda", "distance"]);
    for (name, rows) in [("rs", &regions.rs_rows), ("lpl", &regions.lpl_rows)] {
        for r in rows.iter() {
            reg.push(vec![
                name.into(),
                num(a.gamma),
                num(r.lambda),
                opt_num(r.eta),
                num(regions.reference_lambda),
                num(r.distance),
            ]);
        }
    }
    let mut out = Output::with_table(est);
    out.tables.push(reg);
    out.detail(&json!({ "target": target, "capped_bayes": bayes, "grid_lrse": hat, "regions": regions }))
}

fn validate(a: &ValidateArgs) -> Result<Output> {
    let loaded = load(&a.model, true)?;
    let m = &loaded.model;
    let mut t = Table::new(
        "validate",
        &["status", "theta", "psi", "sample_size", "future_kernel", "truncation_tail_mass"],
    );
    t.push(vec![
        "ok".into(),
        m.n_theta().to_string(),
        m.n_psi().to_string(),
        m.sample_size().map(|s| s.to_string()).unwrap_or_else(|| "continuous".into()),
        loaded.future_kernel.is_some().to_string(),
        opt_num(m.truncation().map(|t| t.tail_mass)),
    ]);
    let canonical = match ModelFile::from_model(m, loaded.future_kernel.as_ref()) {
        Ok(file) => file,
        Err(_) => ModelFile::read(&a.model)?,
    };
    let mut out = Output::with_table(t);
    out.text.push(("model.toml".into(), canonical.to_toml()?));
    Ok(out)
}
