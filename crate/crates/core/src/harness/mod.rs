//! Generation, file formats, solver dispatch, reports and rendering.

pub mod gen;
pub mod io;
pub mod render;
pub mod report;
pub mod solvers;
