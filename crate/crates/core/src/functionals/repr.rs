use super::{AggregatedProcess, Aggregation, EntropicProcess, FunctionalClass, RobustProcess, UtilityProcess, WorstStoppingProcess};
use crate::error::Result;
use crate::filtration::{NodeId, Tree};
use crate::processes::AdaptedProcess;
use crate::scalar::{Ext, Scalar};

/// The supported families behind one type.
#[derive(Debug, Clone)]
pub enum Representation {
    Robust(RobustProcess),
    Entropic(EntropicProcess),
    Aggregated(AggregatedProcess),
    WorstStopping(WorstStoppingProcess),
}

impl Representation {
    pub fn tag(&self) -> &'static str {
        match self {
            Representation::Robust(_) => "robust",
            Representation::Entropic(_) => "entropic",
            Representation::Aggregated(a) => match a.aggregation() {
                Aggregation::InfTime => "inf_time",
                Aggregation::Weighted(_) => "weighted",
            },
            Representation::WorstStopping(_) => "worst_stopping",
        }
    }

    /// Entropic values are only available in floating point.
    pub fn needs_float(&self) -> bool {
        match self {
            Representation::Entropic(_) => true,
            Representation::WorstStopping(w) => w.base().kind() == super::TerminalKind::Entropic,
            _ => false,
        }
    }

    fn inner<S: Scalar>(&self) -> &dyn UtilityProcess<S> {
        match self {
            Representation::Robust(p) => p,
            Representation::Entropic(p) => p,
            Representation::Aggregated(p) => p,
            Representation::WorstStopping(p) => p,
        }
    }
}

impl<S: Scalar> UtilityProcess<S> for Representation {
    fn tree(&self) -> &Tree {
        self.inner::<S>().tree()
    }
    fn start(&self) -> usize {
        self.inner::<S>().start()
    }
    fn horizon(&self) -> usize {
        self.inner::<S>().horizon()
    }
    fn class(&self) -> FunctionalClass {
        self.inner::<S>().class()
    }
    fn value_at(&self, x: &AdaptedProcess<S>, n: NodeId) -> Result<Ext<S>> {
        self.inner::<S>().value_at(x, n)
    }
    fn describe(&self) -> String {
        self.inner::<S>().describe()
    }
}
