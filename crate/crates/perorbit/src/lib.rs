pub use perorbit_core as core;
