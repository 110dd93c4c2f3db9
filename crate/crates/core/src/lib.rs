pub mod assertion_amplifier;
pub mod discovery;
pub mod engine;
pub mod input_amplifier;
pub mod mutation_engine;
pub mod observer;
pub mod python;
pub mod runtime;
pub mod suite_model;
pub mod type_profiler;
