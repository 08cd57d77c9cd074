//! Published worst-write counts, embedded as golden data for the table
//! harness. A `None` entry marks a cell the original tables left blank.

use womcode::verify::BoundKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub levels: u32,
    pub imbalance: Option<u32>,
}

#[derive(Debug, Clone, Copy)]
pub struct PublishedTable {
    pub id: &'static str,
    pub title: &'static str,
    pub cells: u32,
    pub row_messages: &'static [u32],
    pub columns: &'static [Column],
    /// `published[row][col]` parallels `row_messages` x `columns`.
    pub published: &'static [&'static [Option<u32>]],
    /// When set, the rendered table carries a bound row computed from this
    /// formula, and the published values coincide with it.
    pub bound: Option<BoundKind>,
}

const fn flash(levels: u32) -> Column {
    Column {
        levels,
        imbalance: None,
    }
}

const fn ici(levels: u32, d: u32) -> Column {
    Column {
        levels,
        imbalance: Some(d),
    }
}

const Q4_TO_8: &[Column] = &[flash(4), flash(5), flash(6), flash(7), flash(8)];
const Q_WITH_STRETCH: &[Column] = &[
    flash(4),
    flash(5),
    flash(6),
    flash(7),
    flash(8),
    flash(16),
    flash(32),
    flash(48),
];
const Q_ICI_STRETCH: &[Column] = &[
    ici(4, 3),
    ici(5, 3),
    ici(6, 3),
    ici(7, 3),
    ici(8, 3),
    ici(16, 3),
    ici(32, 3),
    ici(48, 3),
];
const D_GRID_N: &[Column] = &[ici(4, 2), ici(8, 2), ici(4, 3), ici(8, 3)];

pub const TABLE_1: PublishedTable = PublishedTable {
    id: "1",
    title: "two-cell flash, k = M",
    cells: 2,
    row_messages: &[4, 5, 6, 7, 8],
    columns: Q4_TO_8,
    published: &[
        &[Some(3), Some(4), Some(5), Some(6), Some(7)],
        &[Some(2), Some(3), Some(4), Some(5), Some(6)],
        &[Some(2), Some(3), Some(3), Some(4), Some(5)],
        &[Some(1), Some(2), Some(3), Some(3), Some(4)],
        &[Some(1), Some(2), Some(3), Some(3), Some(4)],
    ],
    bound: None,
};

pub const TABLE_2: PublishedTable = PublishedTable {
    id: "2",
    title: "two-cell flash vs upper bound, M = 8",
    cells: 2,
    row_messages: &[8],
    columns: Q_WITH_STRETCH,
    published: &[&[
        Some(1),
        Some(2),
        Some(3),
        Some(3),
        Some(4),
        Some(9),
        Some(20),
        Some(31),
    ]],
    bound: Some(BoundKind::Flash),
};

pub const TABLE_3: PublishedTable = PublishedTable {
    id: "3",
    title: "three-cell flash, k = M",
    cells: 3,
    row_messages: &[4, 5, 6, 7, 8],
    columns: Q4_TO_8,
    published: &[
        &[Some(6), Some(8), Some(10), Some(12), Some(14)],
        &[Some(4), Some(5), Some(7), Some(8), Some(10)],
        &[Some(4), Some(5), Some(7), Some(8), Some(10)],
        &[Some(3), Some(5), Some(6), Some(8), Some(9)],
        &[Some(3), Some(4), Some(6), Some(7), Some(8)],
    ],
    bound: None,
};

pub const TABLE_4: PublishedTable = PublishedTable {
    id: "4",
    title: "four-cell flash, k = M",
    cells: 4,
    row_messages: &[5, 6, 7, 8],
    columns: Q4_TO_8,
    published: &[
        &[Some(7), Some(9), Some(12), Some(14), Some(17)],
        &[Some(5), Some(7), Some(9), Some(11), Some(13)],
        &[Some(5), Some(7), Some(9), Some(11), Some(13)],
        &[Some(5), Some(7), Some(9), Some(11), Some(13)],
    ],
    bound: None,
};

pub const TABLE_ICI_UB: PublishedTable = PublishedTable {
    id: "ici-ub",
    title: "two-cell 3-imbalance vs upper bound, M = 8",
    cells: 2,
    row_messages: &[8],
    columns: Q_ICI_STRETCH,
    published: &[&[
        Some(1),
        Some(2),
        Some(3),
        Some(3),
        Some(4),
        Some(9),
        Some(18),
        Some(28),
    ]],
    bound: Some(BoundKind::Ici),
};

pub const TABLE_ICI_N3: PublishedTable = PublishedTable {
    id: "ici-n3",
    title: "three-cell d-imbalance",
    cells: 3,
    row_messages: &[5, 6, 7, 8],
    columns: D_GRID_N,
    published: &[
        &[Some(4), Some(10), Some(4), Some(10)],
        &[Some(4), Some(9), Some(4), Some(10)],
        &[Some(3), Some(9), Some(3), Some(9)],
        &[Some(3), None, Some(3), Some(8)],
    ],
    bound: None,
};

pub const TABLE_ICI_N4: PublishedTable = PublishedTable {
    id: "ici-n4",
    title: "four-cell d-imbalance",
    cells: 4,
    row_messages: &[5, 6, 7, 8],
    columns: D_GRID_N,
    published: &[
        &[Some(7), None, Some(7), Some(17)],
        &[Some(5), Some(13), Some(5), Some(13)],
        &[Some(5), Some(13), Some(5), Some(13)],
        &[Some(5), Some(13), Some(5), Some(13)],
    ],
    bound: None,
};

pub const ALL_TABLES: &[PublishedTable] = &[
    TABLE_1,
    TABLE_2,
    TABLE_3,
    TABLE_4,
    TABLE_ICI_UB,
    TABLE_ICI_N3,
    TABLE_ICI_N4,
];

pub fn table_by_id(id: &str) -> Option<&'static PublishedTable> {
    ALL_TABLES.iter().find(|t| t.id == id)
}
