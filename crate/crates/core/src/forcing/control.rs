use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Piecewise-constant control h: [0, T] → U on K uniform intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPath {
    horizon: f64,
    channels: usize,
    /// Row-major K × channels.
    values: Vec<f64>,
    pub m_bound: Option<f64>,
}

impl ControlPath {
    pub fn zeros(horizon: f64, intervals: usize, channels: usize) -> Result<Self> {
        Self::from_values(horizon, channels, vec![0.0; intervals * channels])
    }

    pub fn from_values(horizon: f64, channels: usize, values: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
        }
        if channels == 0 || values.is_empty() || !values.len().is_multiple_of(channels) {
            return Err(Error::InvalidArgument(format!(
                "{} control values do not fill whole intervals of {channels} channels",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control values".into()));
        }
        Ok(Self {
            horizon,
            channels,
            values,
            m_bound: None,
        })
    }

    /// h ≡ value on [0, T].
    pub fn constant(horizon: f64, intervals: usize, value: &[f64]) -> Result<Self> {
        let values = (0..intervals).flat_map(|_| value.iter().copied()).collect();
        Self::from_values(horizon, value.len(), values)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn intervals(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn interval_len(&self) -> f64 {
        self.horizon / self.intervals() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let k = self.intervals();
        (0..=k).map(|i| self.horizon * i as f64 / k as f64).collect()
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.channels..(k + 1) * self.channels]
    }

    pub fn value_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.channels..(k + 1) * self.channels]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Interval index containing t (right end belongs to the last interval).
    pub fn interval_of(&self, t: f64) -> usize {
        let k = (t / self.interval_len()).floor();
        (k.max(0.0) as usize).min(self.intervals() - 1)
    }

    /// ∫₀ᵀ |h|²_U dt.
    pub fn l2_norm_sq(&self) -> f64 {
        self.interval_len() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// ½ ∫₀ᵀ |h|²_U dt, exact for piecewise-constant paths.
    pub fn action(&self) -> f64 {
        0.5 * self.l2_norm_sq()
    }

    pub fn in_ball(&self, m: f64) -> bool {
        self.l2_norm_sq() <= m
    }

    /// Radial projection onto T_M = {∫|h|² ≤ M}.
    pub fn project_to_tm(&self, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidArgument(format!("M = {m} must be positive")));
        }
        let mut out = self.clone();
        out.m_bound = Some(m);
        let n = self.l2_norm_sq();
        if n > m {
            let s = (m / n).sqrt();
            out.values.iter_mut().for_each(|v| *v *= s);
            // round-off can leave the scaled path a hair outside
            while out.l2_norm_sq() > m {
                out.values.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// h + amp·sin(2πnt)·e_channel, sampled at interval midpoints. Requires
    /// more than two intervals per period.
    pub fn oscillatory_family(&self, n: usize, amp: f64, channel: usize) -> Result<Self> {
        if channel >= self.channels {
            return Err(Error::InvalidArgument(format!(
                "channel {channel} out of range for {} channels",
                self.channels
            )));
        }
        let k = self.intervals();
        if n as f64 * self.horizon * 2.0 >= k as f64 {
            return Err(Error::Aliasing { n, intervals: k });
        }
        let mut out = self.clone();
        let dt = self.interval_len();
        for i in 0..k {
            let t = (i as f64 + 0.5) * dt;
            out.value_mut(i)[channel] += amp * (2.0 * PI * n as f64 * t).sin();
        }
        Ok(out)
    }

    /// ∫₀ᵀ ⟨h(t), g(t)⟩ dt with g evaluated at interval midpoints.
    pub fn pair_with<F: Fn(f64) -> Vec<f64>>(&self, g: F) -> f64 {
        let dt = self.interval_len();
        (0..self.intervals())
            .map(|i| {
                let gv = g((i as f64 + 0.5) * dt);
                self.value(i).iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>() * dt
            })
            .sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t_start,t_end")?;
        for c in 0..self.channels {
            write!(w, ",channel_{c}")?;
        }
        writeln!(w)?;
        let t = self.times();
        for k in 0..self.intervals() {
            write!(w, "{:?},{:?}", t[k], t[k + 1])?;
            for v in self.value(k) {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty control file".into()))??;
        let channels = header.split(',').count().saturating_sub(2);
        if !header.starts_with("t_start,t_end") || channels == 0 {
            return Err(Error::Parse(format!("bad control header: {header}")));
        }
        let mut values = Vec::new();
        let mut horizon = 0.0;
        let mut start = 0.0;
        let mut width: Option<f64> = None;
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<f64> = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {row}: {e}")))
                })
                .collect::<Result<_>>()?;
            if cells.len() != channels + 2 {
                return Err(Error::Parse(format!("row {row}: expected {} cells", channels + 2)));
            }
            let w = cells[1] - cells[0];
            if (cells[0] - start).abs() > 1e-9 || width.is_some_and(|x| (x - w).abs() > 1e-9 * x) {
                return Err(Error::Parse(format!("row {row}: grid is not uniform and contiguous")));
            }
            width.get_or_insert(w);
            start = cells[1];
            horizon = cells[1];
            values.extend_from_slice(&cells[2..]);
        }
        Self::from_values(horizon, channels, values)
    }
}
