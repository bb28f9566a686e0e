//! Time-tagged detection events: ingestion, time-window selection,
//! effective-parameter estimation, table reporting and a synthetic event
//! generator.

mod estimate;
mod events;
mod synth;
mod table;
mod window;

pub use estimate::{estimate_effective_params, estimate_from_click_rates, EffectiveParams};
pub use events::{export, ingest, ingest_path, EventLog, EventRecord, RunMeta, EVENT_HEADER};
pub use synth::{generate_synthetic, LeakageProfile, OffsetProfile, Segment};
pub use table::{percent_1dp, read_counts, sci_3sf, table_report, CountsRow, PrintedRow, TableRow};
pub use window::{apply_window, click_rates, window_grid, window_search, ClickRates, TimeWindow, WindowChoice, WindowedStats};

/// Duration of one pulse bin in the main experiment, picoseconds.
pub const DEFAULT_BIN_PS: u32 = 900;
/// Default window traversal step, picoseconds.
pub const DEFAULT_GRID_STEP_PS: u32 = 30;
