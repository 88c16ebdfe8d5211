use std::sync::Arc;

use crate::operators::{ForwardOperator, Resolvent};
use crate::space::InnerProductSpace;

/// A monotone inclusion `0 ∈ A(u) + B(u)` on a given inner-product space.
#[derive(Clone)]
pub struct Inclusion {
    pub forward: Arc<dyn ForwardOperator>,
    pub resolvent: Arc<dyn Resolvent>,
    pub space: InnerProductSpace,
}

impl Inclusion {
    pub fn new(
        forward: impl ForwardOperator + 'static,
        resolvent: impl Resolvent + 'static,
        space: InnerProductSpace,
    ) -> Self {
        Self {
            forward: Arc::new(forward),
            resolvent: Arc::new(resolvent),
            space,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

impl std::fmt::Debug for Inclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Inclusion")
            .field("forward", &self.forward.label())
            .field("resolvent", &self.resolvent.label())
            .field("dim", &self.space.dim())
            .finish()
    }
}
