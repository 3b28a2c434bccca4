use std::io::Write;

use super::{BarotropicField, Dynamics};
use crate::error::Result;
use crate::spectral::{dot, SpectralState};

/// One operator call: input and output norms plus the residual of the
/// invariant the operator is expected to satisfy.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticRow {
    pub time: f64,
    pub operator: &'static str,
    pub input_norm: f64,
    pub input2_norm: f64,
    pub output_norm: f64,
    pub residual: f64,
}

/// Per-call operator diagnostics, dumped as CSV.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticLog {
    pub rows: Vec<DiagnosticRow>,
}

impl DiagnosticLog {
    pub const HEADER: &'static str =
        "time,operator,input_norm,input2_norm,output_norm,invariant_residual";

    /// Evaluates B(Y, Y₁) and records |(B(Y,Y₁),Y₁)| / (‖Y‖‖Y₁‖²).
    pub fn eval_b(
        &mut self,
        d: &Dynamics,
        y: &SpectralState,
        y1: &SpectralState,
    ) -> Result<SpectralState> {
        let out = d.eval_b(y, y1)?;
        let scale = y.v_norm() * y1.v_norm().powi(2);
        let r = dot(out.coeffs(), y1.coeffs()).abs();
        self.rows.push(DiagnosticRow {
            time: y.time,
            operator: "B",
            input_norm: y.v_norm(),
            input2_norm: y1.v_norm(),
            output_norm: out.l2_norm(),
            residual: if scale > 0.0 { r / scale } else { r },
        });
        Ok(out)
    }

    /// Evaluates G(Y) and records the divergence residual of its barotropic part.
    pub fn eval_g(&mut self, d: &Dynamics, y: &SpectralState) -> Result<SpectralState> {
        let out = d.eval_g(y)?;
        self.rows.push(DiagnosticRow {
            time: y.time,
            operator: "G",
            input_norm: y.l2_norm(),
            input2_norm: 0.0,
            output_norm: out.l2_norm(),
            residual: d.constraint_residual(&out),
        });
        Ok(out)
    }

    pub fn solve_pb(
        &mut self,
        d: &Dynamics,
        rhs: &BarotropicField,
        time: f64,
    ) -> Result<super::BarotropicPressure> {
        let p = d.solve_pb(rhs)?;
        self.rows.push(DiagnosticRow {
            time,
            operator: "pb",
            input_norm: rhs.norm(),
            input2_norm: 0.0,
            output_norm: p.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt(),
            residual: p.residual,
        });
        Ok(p)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{:?},{},{:?},{:?},{:?},{:?}",
                r.time, r.operator, r.input_norm, r.input2_norm, r.output_norm, r.residual
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Physics;
    use crate::spectral::build_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn records_rows_and_writes_csv() {
        let b = build_basis(2, 1).unwrap();
        let d = Dynamics::new(&b, Physics::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut y = SpectralState::random_smooth(&b, 1.0, 1.0, &mut rng);
        d.project(&mut y).unwrap();
        let mut log = DiagnosticLog::default();
        log.eval_b(&d, &y, &y).unwrap();
        log.eval_g(&d, &y).unwrap();
        log.solve_pb(&d, &BarotropicField::zeros(2), 0.0).unwrap();
        assert!(log.rows.iter().all(|r| r.residual < 1e-12));
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with(DiagnosticLog::HEADER));
    }
}
