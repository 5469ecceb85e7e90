pub mod linalg;
pub mod cones;
pub mod model;
pub mod kkt;
pub mod ipm;
pub mod io;
