pub mod checkpoint;
pub mod defaults;
pub mod grid_file;
pub mod report;
pub mod runner;
pub mod scenario_dir;
pub mod service;
pub mod sweep;
pub mod train;
pub mod view;
pub mod wire;
