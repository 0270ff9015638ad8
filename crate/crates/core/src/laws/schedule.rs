use serde::{Deserialize, Serialize};

/// How a per-generation quantity varies with the generation index `n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    #[default]
    Constant,
    Periodic,
    Explicit,
}

/// A time-indexed family: one value for all `n`, a cycle, or an explicit
/// finite list (generations past the end are unscheduled).
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule<T> {
    Constant(T),
    Periodic(Vec<T>),
    Explicit(Vec<T>),
}

impl<T> Schedule<T> {
    pub fn from_parts(kind: ScheduleKind, mut items: Vec<T>) -> Option<Self> {
        match kind {
            ScheduleKind::Constant if items.len() == 1 => Some(Self::Constant(items.remove(0))),
            ScheduleKind::Periodic if !items.is_empty() => Some(Self::Periodic(items)),
            ScheduleKind::Explicit if !items.is_empty() => Some(Self::Explicit(items)),
            _ => None,
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        match self {
            Self::Constant(_) => ScheduleKind::Constant,
            Self::Periodic(_) => ScheduleKind::Periodic,
            Self::Explicit(_) => ScheduleKind::Explicit,
        }
    }

    pub fn at(&self, n: usize) -> Option<&T> {
        match self {
            Self::Constant(t) => Some(t),
            Self::Periodic(v) => v.get(n % v.len()),
            Self::Explicit(v) => v.get(n),
        }
    }

    pub fn items(&self) -> &[T] {
        match self {
            Self::Constant(t) => std::slice::from_ref(t),
            Self::Periodic(v) | Self::Explicit(v) => v,
        }
    }

    /// Period of the schedule, or `None` for explicit lists.
    pub fn period(&self) -> Option<usize> {
        match self {
            Self::Constant(_) => Some(1),
            Self::Periodic(v) => Some(v.len()),
            Self::Explicit(_) => None,
        }
    }

    /// Number of scheduled generations for explicit lists.
    pub fn explicit_len(&self) -> Option<usize> {
        match self {
            Self::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn try_map<U, E>(
        &self,
        mut f: impl FnMut(usize, &T) -> Result<U, E>,
    ) -> Result<Schedule<U>, E> {
        Ok(match self {
            Self::Constant(t) => Schedule::Constant(f(0, t)?),
            Self::Periodic(v) => Schedule::Periodic(
                v.iter()
                    .enumerate()
                    .map(|(i, t)| f(i, t))
                    .collect::<Result<_, _>>()?,
            ),
            Self::Explicit(v) => Schedule::Explicit(
                v.iter()
                    .enumerate()
                    .map(|(i, t)| f(i, t))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Generations an assumption check has to visit for two schedules: the
/// joint periodic closure when both repeat, otherwise the explicit prefix
/// truncated at `horizon`.
pub fn generations_to_check<A, B>(
    a: &Schedule<A>,
    b: &Schedule<B>,
    horizon: Option<usize>,
) -> std::ops::Range<usize> {
    match (a.period(), b.period()) {
        (Some(p), Some(q)) => 0..p / gcd(p, q) * q,
        _ => {
            let mut end = usize::MAX;
            for len in [a.explicit_len(), b.explicit_len(), horizon]
                .into_iter()
                .flatten()
            {
                end = end.min(len);
            }
            0..end
        }
    }
}
