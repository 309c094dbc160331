pub mod expr;
pub mod jet;
pub mod quad;
pub mod equiv;
