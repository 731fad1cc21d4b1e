pub mod automaton;
pub mod logic;
pub mod qiyas;
pub mod rulebase;
pub mod space;
