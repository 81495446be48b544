//! Premise selection and proof advice over typed higher-order corpora.

pub mod advise;
pub mod features;
pub mod fof;
pub mod knowledge;
pub mod learners;
pub mod provers;
pub mod term;
pub mod testkit;
