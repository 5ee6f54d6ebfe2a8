//! KEY=VALUE config file for MethodConfig overrides. Looked up as `nct.conf`
//! in the working directory unless a path is given; flags override the file.

use nct::MethodConfig;
use std::path::Path;

pub fn load(path: Option<&Path>) -> Result<MethodConfig, String> {
    let mut cfg = MethodConfig::default();
    let content = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => match std::fs::read_to_string("nct.conf") {
            Ok(c) => c,
            Err(_) => return Ok(cfg),
        },
    };
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected KEY=VALUE", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let parse = |v: &str| -> Result<f64, String> {
            v.parse::<f64>().map_err(|e| format!("line {}: {e}", lineno + 1))
        };
        match key {
            "tol" => cfg.tol = parse(value)?,
            "zeta_min" => cfg.zeta_min = Some(parse(value)?),
            "n_min_uniform" => cfg.n_min_uniform = parse(value)?,
            "n_min_bounded" => cfg.n_min_bounded = parse(value)?,
            "x_cap_factor" => cfg.x_cap_factor = parse(value)?,
            "eta_switch" => cfg.eta_switch = parse(value)?,
            "max_terms" => cfg.max_terms = parse(value)? as usize,
            "force_method" => {
                cfg.force_method = Some(
                    value
                        .parse()
                        .map_err(|e: nct::Error| format!("line {}: {e}", lineno + 1))?,
                )
            }
            other => return Err(format!("line {}: unknown key '{other}'", lineno + 1)),
        }
    }
    Ok(cfg)
}
