pub mod algebra;
pub mod devices;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod modes;
pub mod oracle;
pub mod par;
pub mod selfcheck;
pub mod states;
