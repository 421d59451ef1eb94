//! Glicko-2 ratings on the native (mu, phi) scale.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Glicko-1 points per native unit.
pub const SCALE: f64 = 173.7178;
pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_SIGMA: f64 = 0.06;
const EPSILON: f64 = 1e-6;
const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub phi: f64,
    pub sigma: f64,
}

impl Default for Rating {
    /// An unrated player: 1500 / 350 / 0.06 on the Glicko-1 scale.
    fn default() -> Self {
        Self { mu: 0.0, phi: 350.0 / SCALE, sigma: DEFAULT_SIGMA }
    }
}

impl Rating {
    pub fn new(mu: f64, phi: f64, sigma: f64) -> Self {
        Self { mu, phi, sigma }
    }

    pub fn from_glicko(r: f64, rd: f64, sigma: f64) -> Self {
        Self { mu: (r - 1500.0) / SCALE, phi: rd / SCALE, sigma }
    }

    /// (r, RD) on the Glicko-1 scale.
    pub fn to_glicko(self) -> (f64, f64) {
        (self.mu * SCALE + 1500.0, self.phi * SCALE)
    }
}

fn g(phi: f64) -> f64 {
    1.0 / (1.0 + 3.0 * phi * phi / (PI * PI)).sqrt()
}

fn e(mu: f64, mu_j: f64, phi_j: f64) -> f64 {
    1.0 / (1.0 + (-g(phi_j) * (mu - mu_j)).exp())
}

/// Probability that `a` beats `b`.
pub fn expected_score(a: Rating, b: Rating) -> f64 {
    e(a.mu, b.mu, b.phi)
}

/// 95% interval (mu - 2 phi, mu + 2 phi).
pub fn interval(r: Rating) -> (f64, f64) {
    (r.mu - 2.0 * r.phi, r.mu + 2.0 * r.phi)
}

/// One rating period. Scores are 1 (win), 0.5 (tie) or 0 (loss).
pub fn update(player: Rating, results: &[(Rating, f64)], tau: f64) -> Result<Rating, Error> {
    if results.is_empty() {
        return Err(Error::Rating("no results in rating period".into()));
    }
    let Rating { mu, phi, sigma } = player;
    let mut inv_v = 0.0;
    let mut sum = 0.0;
    for &(opp, s) in results {
        let gj = g(opp.phi);
        let ej = e(mu, opp.mu, opp.phi);
        inv_v += gj * gj * ej * (1.0 - ej);
        sum += gj * (s - ej);
    }
    let v = 1.0 / inv_v;
    let delta = v * sum;

    let a = (sigma * sigma).ln();
    let f = |x: f64| {
        let ex = x.exp();
        let d = phi * phi + v + ex;
        ex * (delta * delta - phi * phi - v - ex) / (2.0 * d * d) - (x - a) / (tau * tau)
    };
    let mut big_a = a;
    let mut big_b = if delta * delta > phi * phi + v {
        (delta * delta - phi * phi - v).ln()
    } else {
        let mut k = 1.0;
        while f(a - k * tau) < 0.0 {
            k += 1.0;
            if k > MAX_ITERATIONS as f64 {
                return Err(Error::Rating("volatility bracket not found".into()));
            }
        }
        a - k * tau
    };
    let mut fa = f(big_a);
    let mut fb = f(big_b);
    let mut iterations = 0;
    while (big_b - big_a).abs() > EPSILON {
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(Error::Rating("volatility iteration did not converge".into()));
        }
        let c = big_a + (big_a - big_b) * fa / (fb - fa);
        let fc = f(c);
        if fc * fb <= 0.0 {
            big_a = big_b;
            fa = fb;
        } else {
            fa /= 2.0;
        }
        big_b = c;
        fb = fc;
    }
    let sigma_new = (big_a / 2.0).exp();
    let phi_star = (phi * phi + sigma_new * sigma_new).sqrt();
    let phi_new = 1.0 / (1.0 / (phi_star * phi_star) + 1.0 / v).sqrt();
    let mu_new = mu + phi_new * phi_new * sum;
    Ok(Rating { mu: mu_new, phi: phi_new, sigma: sigma_new })
}

/// Rates a sequence of games, one rating period per game, both players
/// updated from their pre-game ratings. Players start at [`Rating::default`].
pub fn rate_games<S: AsRef<str>>(games: &[(S, S, f64)], tau: f64) -> Result<BTreeMap<String, Rating>, Error> {
    let mut table: BTreeMap<String, Rating> = BTreeMap::new();
    for (a, b, score) in games {
        let (a, b) = (a.as_ref(), b.as_ref());
        let ra = table.get(a).copied().unwrap_or_default();
        let rb = table.get(b).copied().unwrap_or_default();
        let na = update(ra, &[(rb, *score)], tau)?;
        let nb = update(rb, &[(ra, 1.0 - *score)], tau)?;
        table.insert(a.to_string(), na);
        table.insert(b.to_string(), nb);
    }
    Ok(table)
}

/// Parses `player opponent score` lines; blank lines and `#` comments are skipped.
pub fn parse_results(text: &str) -> Result<Vec<(String, String, f64)>, Error> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: &str| Error::Parse { line: i + 1, message: m.to_string() };
        let [a, b, s] = parts[..] else {
            return Err(bad("expected: player opponent score"));
        };
        let s: f64 = s.parse().map_err(|_| bad("score is not a number"))?;
        if ![0.0, 0.5, 1.0].contains(&s) {
            return Err(bad("score must be 0, 0.5 or 1"));
        }
        out.push((a.to_string(), b.to_string(), s));
    }
    Ok(out)
}
