//! Published rank tables for the February 3-9, 2016 window.

/// (candidate, positive count, predicted rank, poll rank, e)
pub const DEMOCRATIC: [(&str, u64, u32, u32, u32); 3] = [
    ("Clinton", 0, 3, 1, 2),
    ("O'Malley", 14, 2, 3, 1),
    ("Sanders", 3335, 1, 2, 1),
];

/// (candidate, positive count, predicted, adjusted, poll rank, e)
pub const REPUBLICAN: [(&str, u64, u32, u32, u32, u32); 12] = [
    ("Bush", 0, 9, 8, 5, 3),
    ("Carson", 0, 9, 8, 8, 0),
    ("Christie", 0, 9, 8, 8, 0),
    ("Cruz", 1432, 1, 1, 2, 1),
    ("Fiorina", 88, 6, 6, 7, 1),
    ("Gilmore", 5, 8, 8, 8, 0),
    ("Huckabee", 11, 7, 7, 8, 1),
    ("Kasich", 133, 5, 5, 6, 1),
    ("Paul", 645, 3, 3, 8, 5),
    ("Rubio", 1239, 2, 2, 3, 1),
    ("Santorum", 186, 4, 4, 4, 0),
    ("Trump", 0, 9, 8, 1, 7),
];

pub const REMAINING_DEMOCRATIC: u32 = 2;
pub const REMAINING_REPUBLICAN: u32 = 7;
