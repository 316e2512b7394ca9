use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Min, median and mean of needed-N values, a DNF counting as +inf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub trials: usize,
    pub successes: usize,
    pub min: T,
    pub median: T,
    pub mean: T,
}

impl<T: Scalar> Summary<T> {
    pub fn of(values: &[Option<usize>]) -> Self {
        let mut v: Vec<T> = values.iter().map(|x| x.map_or_else(T::infinity, T::from_count)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        let n = v.len();
        let nan = T::nan();
        let median = match n {
            0 => nan,
            _ if n % 2 == 1 => v[n / 2],
            _ => (v[n / 2 - 1] + v[n / 2]) / (T::one() + T::one()),
        };
        let mean = if n == 0 { nan } else { v.iter().fold(T::zero(), |a, &b| a + b) / T::from_count(n) };
        Summary {
            trials: n,
            successes: values.iter().filter(|x| x.is_some()).count(),
            min: v.first().copied().unwrap_or(nan),
            median,
            mean,
        }
    }
}

/// CSV rendering: `DNF` for +inf, empty for NaN.
pub(crate) fn cell<T: Scalar>(x: T) -> String {
    if x.is_infinite() {
        "DNF".into()
    } else if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}
