use std::collections::VecDeque;

use crate::error::ModelError;

/// Fixed transport delay on a sampled signal.
///
/// Each [`push`](DelayLine::push) stores the current value and returns the
/// value pushed `lag` calls earlier, where `lag = round(delay / dt)`. Until
/// the buffer fills, the first pushed value is held.
#[derive(Clone, Debug)]
pub struct DelayLine<T> {
    lag: usize,
    buf: VecDeque<T>,
}

impl<T: Clone> DelayLine<T> {
    pub fn new(delay: f64, dt: f64) -> Result<Self, ModelError> {
        if !delay.is_finite() || delay < 0.0 {
            return Err(ModelError::NegativeDelay(delay));
        }
        if dt.is_nan() || dt <= 0.0 {
            return Err(ModelError::InvalidSettings(format!("delay line step must be > 0, got {dt}")));
        }
        let lag = (delay / dt).round() as usize;
        Ok(DelayLine { lag, buf: VecDeque::with_capacity(lag + 1) })
    }

    pub fn lag_steps(&self) -> usize {
        self.lag
    }

    pub fn push(&mut self, value: T) -> T {
        if self.lag == 0 {
            return value;
        }
        self.buf.push_back(value);
        if self.buf.len() > self.lag + 1 {
            self.buf.pop_front();
        }
        self.buf.front().cloned().expect("buffer holds at least one value")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delay_is_identity() {
        let mut d = DelayLine::new(0.0, 1e-3).unwrap();
        for k in 0..10 {
            assert_eq!(d.push(k as f64), k as f64);
        }
    }

    #[test]
    fn negative_delay_is_rejected() {
        assert!(matches!(DelayLine::<f64>::new(-0.1, 1e-3), Err(ModelError::NegativeDelay(_))));
    }

    #[test]
    fn constant_input_passes_through() {
        let mut d = DelayLine::new(0.05, 1e-3).unwrap();
        for _ in 0..200 {
            assert_eq!(d.push(2.5), 2.5);
        }
    }

    #[test]
    fn step_is_shifted_by_the_delay() {
        let dt = 1e-3;
        let mut d = DelayLine::new(0.2, dt).unwrap();
        let mut first_high = None;
        for k in 0..2000 {
            let t = k as f64 * dt;
            let u = if t >= 1.0 - 1e-12 { 1.0 } else { 0.0 };
            if d.push(u) == 1.0 && first_high.is_none() {
                first_high = Some(t);
            }
        }
        let t = first_high.unwrap();
        assert!((t - 1.2).abs() <= dt + 1e-12, "step seen at {t}");
    }
}
