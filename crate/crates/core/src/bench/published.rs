//! Published one-hour benchmark tables, stored exactly as printed.

use crate::charge::ModelId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedRow {
    pub application: &'static str,
    pub perf_ratio: u32,
    pub cpu_charge: u64,
    pub gpu_charge: u64,
    /// Verbatim, including its printed precision.
    pub cost_ratio: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedTable {
    pub number: u8,
    pub model: ModelId,
    pub title: &'static str,
    pub rows: &'static [PublishedRow],
}

const fn row(
    application: &'static str,
    perf_ratio: u32,
    cpu_charge: u64,
    gpu_charge: u64,
    cost_ratio: &'static str,
) -> PublishedRow {
    PublishedRow {
        application,
        perf_ratio,
        cpu_charge,
        gpu_charge,
        cost_ratio,
    }
}

const SM_ROWS: [PublishedRow; 13] = [
    row("FUN3D", 41, 1476, 432, "3.42"),
    row("RTM", 32, 1152, 432, "2.67"),
    row("SPECFEM3D", 105, 3780, 432, "8.75"),
    row("AMBER", 153, 5508, 432, "12.7"),
    row("GROMACS", 23, 828, 432, "1.92"),
    row("LAMMPS", 59, 2124, 432, "4.92"),
    row("NAMD", 36, 1296, 432, "3.00"),
    row("Relion", 12, 432, 432, "1.00"),
    row("GTC", 53, 1908, 432, "4.42"),
    row("MILC", 108, 3888, 432, "9.00"),
    row("Chroma", 99, 3564, 432, "8.25"),
    row("Quantum Expresso", 13, 468, 432, "1.08"),
    row("ICON", 15, 540, 432, "1.25"),
];

const PEAK_PERF_ROWS: [PublishedRow; 13] = [
    row("FUN3D", 41, 1476, 466, "3.17"),
    row("RTM", 32, 1152, 466, "2.47"),
    row("SPECFEM3D", 105, 3780, 466, "8.11"),
    row("AMBER", 153, 5508, 466, "11.8"),
    row("GROMACS", 23, 828, 466, "1.78"),
    row("LAMMPS", 59, 2124, 466, "4.56"),
    row("NAMD", 36, 1296, 466, "2.78"),
    row("Relion", 12, 432, 466, "0.93"),
    row("GTC", 53, 1908, 466, "4.09"),
    row("MILC", 108, 3888, 466, "8.34"),
    row("Chroma", 99, 3564, 466, "7.64"),
    row("Quantum Expresso", 13, 468, 466, "1.00"),
    row("ICON", 15, 540, 466, "1.16"),
];

const ENERGY_ROWS: [PublishedRow; 13] = [
    row("FUN3D", 41, 1476, 192, "7.69"),
    row("RTM", 32, 1152, 192, "6"),
    row("SPECFEM3D", 105, 3780, 192, "19.69"),
    row("AMBER", 153, 5508, 192, "28.68"),
    row("GROMACS", 23, 828, 192, "4.31"),
    row("LAMMPS", 59, 2124, 192, "11.06"),
    row("NAMD", 36, 1296, 192, "6.75"),
    row("Relion", 12, 432, 192, "2.25"),
    row("GTC", 53, 1908, 192, "9.94"),
    row("MILC", 108, 3888, 192, "20.25"),
    row("Chroma", 99, 3564, 192, "18.56"),
    row("Quantum Expresso", 13, 468, 192, "2.44"),
    row("ICON", 15, 540, 192, "2.81"),
];

static TABLES: [PublishedTable; 3] = [
    PublishedTable {
        number: 2,
        model: ModelId::Sm,
        title: "SM-based charging, one-hour runs",
        rows: &SM_ROWS,
    },
    PublishedTable {
        number: 3,
        model: ModelId::PeakPerf,
        title: "Peak-performance-based charging, one-hour runs",
        rows: &PEAK_PERF_ROWS,
    },
    PublishedTable {
        number: 4,
        model: ModelId::Energy,
        title: "Energy-based charging, one-hour runs",
        rows: &ENERGY_ROWS,
    },
];

pub fn published_tables() -> &'static [PublishedTable] {
    &TABLES
}

pub fn published_table(number: u8) -> Option<&'static PublishedTable> {
    TABLES.iter().find(|t| t.number == number)
}
