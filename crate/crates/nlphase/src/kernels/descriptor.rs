//! Plain-text `key=value` kernel descriptors.
//!
//! Records are separated by newlines or `;`. Blank records and `#` comments
//! are ignored. Recognised keys: `kind` (fractional | aniso | compact),
//! `dim`, `s`, `radius`, `rho`, `scale`, `axes` (`a,b` semi-axes of an
//! elliptical norm ball), `angle` (radians) and `radii` (comma-separated
//! radial samples of the norm ball over [0, π)).

use std::fmt;

use super::{Family, Kernel, KernelError, NormBall};
use crate::kernels::ball::BallDescriptor;

pub const KINDS: [&str; 3] = ["fractional", "aniso", "compact"];

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelSpec {
    pub kind: String,
    pub dim: usize,
    pub s: Option<f64>,
    pub radius: Option<f64>,
    pub rho: Option<f64>,
    pub scale: Option<f64>,
    pub axes: Option<(f64, f64)>,
    pub angle: Option<f64>,
    pub radii: Option<Vec<f64>>,
}

fn num(line: usize, key: &str, v: &str) -> Result<f64, KernelError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| KernelError::Parse { line, msg: format!("'{key}' expects a number, got '{v}'") })?;
    if !x.is_finite() {
        return Err(KernelError::Parse { line, msg: format!("'{key}' must be finite") });
    }
    Ok(x)
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, KernelError> {
    v.split(',').map(|p| num(line, key, p)).collect()
}

impl KernelSpec {
    /// Parse a descriptor record.
    pub fn parse(text: &str) -> Result<Self, KernelError> {
        let mut spec = KernelSpec::default();
        let mut have_kind = false;
        let mut have_dim = false;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("");
            for rec in content.split(';') {
                let rec = rec.trim();
                if rec.is_empty() {
                    continue;
                }
                let (k, v) = rec
                    .split_once('=')
                    .ok_or_else(|| KernelError::Parse { line, msg: format!("expected key=value, got '{rec}'") })?;
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "kind" => {
                        spec.kind = v.to_string();
                        have_kind = true;
                    }
                    "dim" => {
                        spec.dim = v
                            .parse()
                            .map_err(|_| KernelError::Parse { line, msg: format!("'dim' expects a positive integer, got '{v}'") })?;
                        have_dim = true;
                    }
                    "s" => spec.s = Some(num(line, k, v)?),
                    "radius" => spec.radius = Some(num(line, k, v)?),
                    "rho" => spec.rho = Some(num(line, k, v)?),
                    "scale" => spec.scale = Some(num(line, k, v)?),
                    "angle" => spec.angle = Some(num(line, k, v)?),
                    "axes" => {
                        let a = list(line, k, v)?;
                        if a.len() != 2 {
                            return Err(KernelError::Parse { line, msg: "'axes' expects two numbers a,b".into() });
                        }
                        spec.axes = Some((a[0], a[1]));
                    }
                    "radii" => spec.radii = Some(list(line, k, v)?),
                    other => {
                        return Err(KernelError::Parse { line, msg: format!("unknown key '{other}'") });
                    }
                }
            }
        }
        if !have_kind {
            return Err(KernelError::Parse { line: 0, msg: "missing key 'kind'".into() });
        }
        if !have_dim {
            spec.dim = if spec.kind == "aniso" { 2 } else { 1 };
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<Kernel, KernelError> {
        let base = match self.kind.as_str() {
            "fractional" => {
                let s = self.s.ok_or(KernelError::Parse { line: 0, msg: "fractional kernels need 's'".into() })?;
                Kernel::fractional(self.dim, s)?
            }
            "aniso" => {
                if self.dim != 2 {
                    return Err(KernelError::Dimension { dim: self.dim, reason: "anisotropic kernels are planar".into() });
                }
                let s = self.s.ok_or(KernelError::Parse { line: 0, msg: "aniso kernels need 's'".into() })?;
                let ball = match (&self.axes, &self.radii) {
                    (Some((a, b)), None) => NormBall::ellipse(*a, *b, self.angle.unwrap_or(0.0))?,
                    (None, Some(r)) => NormBall::from_radii(r.clone())?,
                    _ => {
                        return Err(KernelError::Parse { line: 0, msg: "aniso kernels need exactly one of 'axes' or 'radii'".into() })
                    }
                };
                Kernel::anisotropic(s, ball)?
            }
            "compact" => {
                let r = self.radius.unwrap_or(1.0);
                Kernel::compact_radial(self.dim, r)?
            }
            other => {
                return Err(KernelError::UnknownKind {
                    kind: other.to_string(),
                    expected: KINDS.iter().map(|s| s.to_string()).collect(),
                })
            }
        };
        let mut k = base;
        if let Some(eps) = self.scale {
            k = k.scaled(eps)?;
        }
        if let Some(rho) = self.rho {
            k = k.truncated(rho)?;
        }
        Ok(k)
    }

    pub fn from_kernel(k: &Kernel) -> Self {
        let mut spec = KernelSpec { dim: k.dim(), ..Default::default() };
        match k.family() {
            Family::Fractional { s } => {
                spec.kind = "fractional".into();
                spec.s = Some(*s);
            }
            Family::AnisoFractional { s, ball } => {
                spec.kind = "aniso".into();
                spec.s = Some(*s);
                match ball.descriptor() {
                    BallDescriptor::Ellipse { a, b, angle } => {
                        spec.axes = Some((*a, *b));
                        spec.angle = Some(*angle);
                    }
                    BallDescriptor::Samples => spec.radii = Some(ball.radii().to_vec()),
                }
            }
            Family::CompactRadial { radius } => {
                spec.kind = "compact".into();
                spec.radius = Some(*radius);
            }
        }
        if k.scale_factor() != 1.0 {
            spec.scale = Some(k.scale_factor());
        }
        if k.cut() > 0.0 {
            spec.rho = Some(k.cut());
        }
        spec
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={};dim={}", self.kind, self.dim)?;
        if let Some(s) = self.s {
            write!(f, ";s={s}")?;
        }
        if let Some(r) = self.radius {
            write!(f, ";radius={r}")?;
        }
        if let Some(e) = self.scale {
            write!(f, ";scale={e}")?;
        }
        if let Some(r) = self.rho {
            write!(f, ";rho={r}")?;
        }
        if let Some((a, b)) = self.axes {
            write!(f, ";axes={a},{b}")?;
        }
        if let Some(a) = self.angle {
            write!(f, ";angle={a}")?;
        }
        if let Some(r) = &self.radii {
            let parts: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            write!(f, ";radii={}", parts.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let spec = KernelSpec::parse("kind=fractional\ndim=1\ns=0.75\n# comment\nrho=0.1").unwrap();
        assert_eq!(spec.s, Some(0.75));
        let k = spec.build().unwrap();
        assert_eq!(k.kind_tag(), "truncated");
        let again = KernelSpec::parse(&k.descriptor().to_string()).unwrap().build().unwrap();
        assert_eq!(k, again);
    }

    #[test]
    fn aniso_round_trip() {
        let k = KernelSpec::parse("kind=aniso; s=0.75; axes=2,1; angle=0.3").unwrap().build().unwrap();
        let again = KernelSpec::parse(&k.descriptor().to_string()).unwrap().build().unwrap();
        assert_eq!(k, again);
    }

    #[test]
    fn errors_carry_lines() {
        match KernelSpec::parse("kind=fractional\ns=abc") {
            Err(KernelError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(KernelSpec::parse("dim=1").is_err());
        assert!(KernelSpec::parse("kind=fractional;bogus=1").is_err());
        assert!(matches!(
            KernelSpec::parse("kind=gaussian").unwrap().build(),
            Err(KernelError::UnknownKind { .. })
        ));
        assert!(KernelSpec::parse("kind=fractional;s=0.5").unwrap().build().is_err());
    }
}
