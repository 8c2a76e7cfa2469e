//! Run specifications: parsing from dotted-key TOML and exhaustive validation.

use std::fmt;
use std::path::PathBuf;

use giantpolaron_core::dynamics::step_bound;
use giantpolaron_core::equilibrium::{ProfileConvention, TailModel};
use giantpolaron_core::polaron::{InitialGuess, SolverOptions};
use giantpolaron_core::waveguide::{build_modes, equidistant_contacts, SystemConfig};
use serde::Serialize;
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Gs,
    PhaseDiagram,
    Markov,
    Dynamics,
    Dde,
    BoundScan,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Gs => "gs",
            Mode::PhaseDiagram => "phase-diagram",
            Mode::Markov => "markov",
            Mode::Dynamics => "dynamics",
            Mode::Dde => "dde",
            Mode::BoundScan => "bound-scan",
        }
    }

    /// Inverse of [`Mode::name`].
    pub fn from_name(s: &str) -> Option<Self> {
        [
            Mode::Gs,
            Mode::PhaseDiagram,
            Mode::Markov,
            Mode::Dynamics,
            Mode::Dde,
            Mode::BoundScan,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

/// One validation failure, addressed by its dotted field path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Linearly spaced axis `start..=stop` with `count` points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// Values rounded to lattice sites, duplicates removed.
    pub fn sites(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.values().iter().map(|x| x.round() as usize).collect();
        v.dedup();
        v
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Sweep {
    pub alpha: Option<Axis>,
    pub x: Option<Axis>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileSpec {
    pub convention: ProfileConvention,
    pub fit_model: TailModel,
    pub fit_start: Option<f64>,
    pub fit_stop: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicsSpec {
    pub t_max: f64,
    pub dt: Option<f64>,
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DdeSpec {
    pub t_max: f64,
    pub max_step: Option<f64>,
    /// Use the bare splitting in place of `Delta_r`.
    pub rwa: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundScanSpec {
    pub modes: Vec<i64>,
    pub coexistence_tolerance: f64,
}

/// Fully resolved run description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSpec {
    pub mode: Mode,
    pub system: SystemConfig,
    /// Contact count used when sweeps re-place the contacts.
    pub n_contacts: usize,
    pub solver: SolverOptions,
    pub sweep: Sweep,
    pub profile: ProfileSpec,
    pub dynamics: Option<DynamicsSpec>,
    pub dde: Option<DdeSpec>,
    pub bound_scan: Option<BoundScanSpec>,
    pub output_dir: PathBuf,
}

/// Field reader that records problems instead of stopping.
struct Reader<'a> {
    root: &'a Table,
    diags: Vec<Diagnostic>,
    seen: Vec<String>,
}

impl<'a> Reader<'a> {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn get(&mut self, path: &str) -> Option<&'a Value> {
        self.seen.push(path.to_string());
        let mut parts = path.split('.');
        let mut cur = self.root.get(parts.next()?)?;
        for p in parts {
            cur = cur.as_table()?.get(p)?;
        }
        Some(cur)
    }

    fn has_table(&self, path: &str) -> bool {
        let mut parts = path.split('.');
        let Some(mut cur) = parts.next().and_then(|p| self.root.get(p)) else {
            return false;
        };
        for p in parts {
            match cur.as_table().and_then(|t| t.get(p)) {
                Some(v) => cur = v,
                None => return false,
            }
        }
        cur.is_table()
    }

    fn float(&mut self, path: &str) -> Option<f64> {
        match self.get(path)? {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.push(path, format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn float_or(&mut self, path: &str, default: f64) -> f64 {
        self.float(path).unwrap_or(default)
    }

    fn required_float(&mut self, path: &str) -> Option<f64> {
        let v = self.float(path);
        if v.is_none() && self.get(path).is_none() {
            self.push(path, "required field is missing");
        }
        v
    }

    fn uint(&mut self, path: &str) -> Option<usize> {
        match self.get(path)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            Value::Integer(i) => {
                self.push(path, format!("must be non-negative (got {i})"));
                None
            }
            other => {
                self.push(path, format!("expected an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn boolean(&mut self, path: &str) -> Option<bool> {
        match self.get(path)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.push(path, format!("expected a boolean, found {}", other.type_str()));
                None
            }
        }
    }

    fn string(&mut self, path: &str) -> Option<&'a str> {
        match self.get(path)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                self.push(path, format!("expected a string, found {}", other.type_str()));
                None
            }
        }
    }

    fn float_list(&mut self, path: &str) -> Option<Vec<f64>> {
        let arr = match self.get(path)? {
            Value::Array(a) => a,
            other => {
                self.push(path, format!("expected an array, found {}", other.type_str()));
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, v) in arr.iter().enumerate() {
            match v {
                Value::Float(f) => out.push(*f),
                Value::Integer(n) => out.push(*n as f64),
                other => {
                    self.push(
                        &format!("{path}[{i}]"),
                        format!("expected a number, found {}", other.type_str()),
                    );
                    return None;
                }
            }
        }
        Some(out)
    }

    fn int_list(&mut self, path: &str) -> Option<Vec<i64>> {
        let arr = match self.get(path)? {
            Value::Array(a) => a,
            other => {
                self.push(path, format!("expected an array, found {}", other.type_str()));
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, v) in arr.iter().enumerate() {
            match v {
                Value::Integer(n) => out.push(*n),
                other => {
                    self.push(
                        &format!("{path}[{i}]"),
                        format!("expected an integer, found {}", other.type_str()),
                    );
                    return None;
                }
            }
        }
        Some(out)
    }

    fn axis(&mut self, path: &str) -> Option<Axis> {
        if !self.has_table(path) {
            return None;
        }
        let start = self.required_float(&format!("{path}.start"));
        let stop = self.required_float(&format!("{path}.stop"));
        let count = self.uint(&format!("{path}.count"));
        if count.is_none() && self.get(&format!("{path}.count")).is_none() {
            self.push(&format!("{path}.count"), "required field is missing");
        }
        let axis = Axis {
            start: start?,
            stop: stop?,
            count: count?,
        };
        if axis.count == 0 {
            self.push(&format!("{path}.count"), "must be at least 1");
        }
        if axis.stop < axis.start {
            self.push(&format!("{path}.stop"), "must not be below start");
        }
        Some(axis)
    }

    /// Reports keys that no reader asked for.
    fn unknown_keys(&mut self) {
        let mut stack: Vec<(String, &Value)> =
            self.root.iter().map(|(k, v)| (k.clone(), v)).collect();
        let mut unknown = Vec::new();
        while let Some((path, v)) = stack.pop() {
            let known = self.seen.iter().any(|s| s == &path);
            let prefix = self.seen.iter().any(|s| s.starts_with(&format!("{path}.")));
            match v {
                Value::Table(t) if !known && prefix => {
                    stack.extend(t.iter().map(|(k, v)| (format!("{path}.{k}"), v)));
                }
                _ if known => {}
                _ => unknown.push(path),
            }
        }
        unknown.sort();
        for p in unknown {
            self.push(&p, "unknown key");
        }
    }
}

/// Parses TOML text; returns the spec when there are no diagnostics.
pub fn parse(
    text: &str,
    mode: Mode,
    output_dir: PathBuf,
) -> Result<RunSpec, Vec<Diagnostic>> {
    let root: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            return Err(vec![Diagnostic {
                path: "<file>".into(),
                message: format!("not valid TOML: {}", e.message()),
            }])
        }
    };
    let mut r = Reader {
        root: &root,
        diags: Vec::new(),
        seen: Vec::new(),
    };
    if let Some(m) = r.string("mode") {
        match Mode::from_name(m) {
            Some(found) if found != mode => r.push(
                "mode",
                format!(
                    "config declares mode '{m}' but '{}' was requested",
                    mode.name()
                ),
            ),
            Some(_) => {}
            None => r.push("mode", format!("unknown mode '{m}'")),
        }
    }

    let delta = r.float_or("system.delta", 1.0);
    let alpha = r.required_float("system.alpha").unwrap_or(f64::NAN);
    let omega_c = r.required_float("system.omega_c").unwrap_or(f64::NAN);
    let v_g = r.float_or("system.v_g", 1.0);
    let n_modes = r.uint("system.n_modes");
    if n_modes.is_none() && r.get("system.n_modes").is_none() {
        r.push("system.n_modes", "required field is missing");
    }
    let n_modes = n_modes.unwrap_or(0);
    let explicit = r.int_list("system.contacts");
    let n_contacts = r.uint("system.n_contacts");
    let spacing = r.uint("system.spacing");
    let contacts: Vec<usize> = match (explicit, n_contacts) {
        (Some(list), None) => {
            if spacing.is_some() {
                r.push("system.spacing", "not allowed together with system.contacts");
            }
            let mut out = Vec::new();
            for (i, c) in list.iter().enumerate() {
                if *c < 0 {
                    r.push(
                        &format!("system.contacts[{i}]"),
                        format!("contact {i} at site {c} lies outside the lattice [0, {n_modes})"),
                    );
                } else {
                    out.push(*c as usize);
                }
            }
            out
        }
        (None, Some(nc)) => equidistant_contacts(n_modes, nc, spacing.unwrap_or(0)),
        (Some(_), Some(_)) => {
            r.push(
                "system.contacts",
                "give either system.contacts or system.n_contacts, not both",
            );
            Vec::new()
        }
        (None, None) => {
            r.push(
                "system.n_contacts",
                "required field is missing (or give system.contacts)",
            );
            Vec::new()
        }
    };
    if let Some(nc) = n_contacts {
        if nc == 0 {
            r.push("system.n_contacts", "must be at least 1");
        } else if let Some(x) = spacing {
            let span = (nc - 1) * x;
            if span >= n_modes && n_modes > 0 {
                r.push(
                    "system.spacing",
                    format!(
                        "contact {} would sit at site {} beyond the lattice [0, {n_modes})",
                        nc - 1,
                        span
                    ),
                );
            }
        }
    }
    let system = SystemConfig {
        delta,
        alpha,
        omega_c,
        v_g,
        n_modes,
        contacts,
    };
    for (path, message) in system.diagnostics() {
        // Missing fields were already reported; do not repeat them as range errors.
        let missing = r.diags.iter().any(|d| d.path == path)
            || (path == "system.alpha" && alpha.is_nan())
            || (path == "system.omega_c" && omega_c.is_nan())
            || (path == "system.contacts" && system.contacts.is_empty() && !r.diags.is_empty());
        if !missing {
            r.push(&path, message);
        }
    }

    let mut solver = SolverOptions::default();
    if let Some(s) = r.string("solver.initial") {
        match s {
            "bare" => solver.initial = InitialGuess::Bare,
            "localized" => solver.initial = InitialGuess::Localized,
            other => r.push(
                "solver.initial",
                format!("expected 'bare' or 'localized', found '{other}'"),
            ),
        }
    }
    solver.damping = r.float_or("solver.damping", solver.damping);
    if !(solver.damping > 0.0 && solver.damping <= 1.0) {
        r.push("solver.damping", format!("must lie in (0, 1] (got {})", solver.damping));
    }
    solver.tolerance = r.float_or("solver.tolerance", solver.tolerance);
    if solver.tolerance <= 0.0 {
        r.push("solver.tolerance", "must be > 0");
    }
    if let Some(n) = r.uint("solver.max_iterations") {
        solver.max_iterations = n;
    }

    let sweep = Sweep {
        alpha: r.axis("sweep.alpha"),
        x: r.axis("sweep.x"),
    };
    if let Some(a) = &sweep.alpha {
        if a.start < 0.0 {
            r.push("sweep.alpha.start", "coupling must be >= 0");
        }
    }
    if let Some(x) = &sweep.x {
        if x.start < 0.0 {
            r.push("sweep.x.start", "spacing must be >= 0");
        }
        if let Some(nc) = n_contacts {
            let span = nc.saturating_sub(1) as f64 * x.stop.round();
            if n_modes > 0 && span >= n_modes as f64 {
                r.push(
                    "sweep.x.stop",
                    format!("contacts would extend to site {span} beyond the lattice [0, {n_modes})"),
                );
            }
        } else {
            r.push("sweep.x", "sweeping x needs system.n_contacts (equidistant contacts)");
        }
    }
    match mode {
        Mode::PhaseDiagram => {
            if sweep.alpha.is_none() {
                r.push("sweep.alpha", "phase-diagram needs an alpha axis");
            }
            if sweep.x.is_none() {
                r.push("sweep.x", "phase-diagram needs an x axis");
            }
        }
        Mode::Markov => {
            if sweep.alpha.is_some() {
                r.push("sweep.alpha", "markov sweeps x only");
            }
        }
        Mode::BoundScan => {
            if sweep.alpha.is_none() {
                r.push("sweep.alpha", "bound-scan needs an alpha axis");
            }
            if sweep.x.is_some() {
                r.push("sweep.x", "bound-scan runs at fixed geometry");
            }
        }
        Mode::Gs | Mode::Dynamics | Mode::Dde => {
            for (axis, present) in [("sweep.alpha", sweep.alpha.is_some()), ("sweep.x", sweep.x.is_some())] {
                if present {
                    r.push(axis, format!("mode {} does not take a sweep", mode.name()));
                }
            }
        }
    }

    let mut profile = ProfileSpec {
        convention: ProfileConvention::Direct,
        fit_model: TailModel::PowerWithOffset,
        fit_start: r.float("profile.fit_start"),
        fit_stop: r.float("profile.fit_stop"),
    };
    if let Some(c) = r.string("profile.convention") {
        match c {
            "direct" => {}
            "replicated" => profile.convention = ProfileConvention::Replicated,
            other => r.push(
                "profile.convention",
                format!("expected 'direct' or 'replicated', found '{other}'"),
            ),
        }
    }
    if let Some(m) = r.string("profile.fit_model") {
        match m {
            "power_with_offset" => {}
            "log_log" => profile.fit_model = TailModel::LogLog,
            other => r.push(
                "profile.fit_model",
                format!("expected 'power_with_offset' or 'log_log', found '{other}'"),
            ),
        }
    }

    let dynamics = if mode == Mode::Dynamics {
        let t_max = r.required_float("dynamics.t_max");
        let dt = r.float("dynamics.dt");
        let snapshots = r.float_list("dynamics.snapshots").unwrap_or_default();
        if let Some(t) = t_max {
            if t <= 0.0 {
                r.push("dynamics.t_max", "must be > 0");
            }
            for (i, s) in snapshots.iter().enumerate() {
                if *s < 0.0 || *s > t {
                    r.push(
                        &format!("dynamics.snapshots[{i}]"),
                        format!("time {s} lies outside [0, {t}]"),
                    );
                }
            }
        }
        if let Some(dt) = dt {
            if system.omega_c > 0.0 {
                let bound = 0.05 / (2.0 * system.omega_c);
                if dt > bound {
                    r.push(
                        "dynamics.dt",
                        format!("step {dt} exceeds the stability bound {bound} = 0.05 / (2 omega_c)"),
                    );
                }
            }
            if dt <= 0.0 {
                r.push("dynamics.dt", "must be > 0");
            }
        }
        t_max.map(|t_max| DynamicsSpec {
            t_max,
            dt,
            snapshots,
        })
    } else {
        None
    };

    let dde = if mode == Mode::Dde {
        let t_max = r.required_float("dde.t_max");
        let max_step = r.float("dde.max_step");
        let rwa = r.boolean("dde.rwa").unwrap_or(false);
        if matches!(t_max, Some(t) if t <= 0.0) {
            r.push("dde.t_max", "must be > 0");
        }
        if matches!(max_step, Some(h) if h <= 0.0) {
            r.push("dde.max_step", "must be > 0");
        }
        t_max.map(|t_max| DdeSpec {
            t_max,
            max_step,
            rwa,
        })
    } else {
        None
    };

    let bound_scan = if mode == Mode::BoundScan {
        let modes = r.int_list("bound_scan.modes");
        if modes.is_none() && r.get("bound_scan.modes").is_none() {
            r.push("bound_scan.modes", "required field is missing");
        }
        let tol = r.float_or("bound_scan.coexistence_tolerance", 1e-3);
        let nc = system.contacts.len();
        if let Some(ms) = &modes {
            if ms.is_empty() {
                r.push("bound_scan.modes", "must list at least one mode index");
            }
            for (i, n) in ms.iter().enumerate() {
                if nc > 0 && n.rem_euclid(nc as i64) == 0 {
                    r.push(
                        &format!("bound_scan.modes[{i}]"),
                        format!(
                            "n = {n} is a multiple of N_c = {nc}: cot(n pi / N_c) is singular"
                        ),
                    );
                }
            }
        }
        if nc < 2 {
            r.push("system", "bound-scan needs at least two contacts");
        }
        modes.map(|modes| BoundScanSpec {
            modes,
            coexistence_tolerance: tol,
        })
    } else {
        None
    };

    r.unknown_keys();
    if r.diags.is_empty() {
        Ok(RunSpec {
            mode,
            n_contacts: n_contacts.unwrap_or(system.contacts.len()),
            system,
            solver,
            sweep,
            profile,
            dynamics,
            dde,
            bound_scan,
            output_dir,
        })
    } else {
        Err(r.diags)
    }
}

/// All problems with a config file; empty iff a run would start.
pub fn validate(text: &str, mode: Mode) -> Vec<Diagnostic> {
    match parse(text, mode, PathBuf::from(".")) {
        Ok(spec) => {
            // Cross-check against the numerical modules' own validation.
            let mut out = Vec::new();
            match build_modes(&spec.system) {
                Ok(grid) => {
                    if let Some(d) = &spec.dynamics {
                        if let Some(dt) = d.dt {
                            let bound = step_bound(&grid);
                            if dt > bound {
                                out.push(Diagnostic {
                                    path: "dynamics.dt".into(),
                                    message: format!("step {dt} exceeds the stability bound {bound}"),
                                });
                            }
                        }
                    }
                }
                Err(e) => out.push(Diagnostic {
                    path: "system".into(),
                    message: e.to_string(),
                }),
            }
            out
        }
        Err(d) => d,
    }
}
