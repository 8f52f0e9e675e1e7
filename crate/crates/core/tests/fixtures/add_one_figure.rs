/// Gates of the printed ten-bit add-one figure in column order, as
/// `(controls, target)` over its 25 rows.
pub const FIGURE_GATES: &[(&[usize], usize)] = &[
    (&[0], 1),
    (&[], 0),
    (&[4, 7], 5),
    (&[9, 12], 10),
    (&[15, 18], 16),
    (&[20, 23], 21),
    (&[10, 16], 13),
    (&[1, 2], 3),
    (&[3, 5], 8),
    (&[8, 13], 19),
    (&[8, 10], 14),
    (&[19, 21], 24),
    (&[3, 4], 6),
    (&[8, 9], 11),
    (&[14, 15], 17),
    (&[19, 20], 22),
    (&[10, 16], 13),
    (&[4, 7], 5),
    (&[9, 12], 10),
    (&[15, 18], 16),
    (&[20, 23], 21),
    (&[1], 2),
    (&[3], 4),
    (&[6], 7),
    (&[8], 9),
    (&[11], 12),
    (&[14], 15),
    (&[17], 18),
    (&[19], 20),
    (&[22], 23),
    (&[], 2),
    (&[], 4),
    (&[], 7),
    (&[], 9),
    (&[], 12),
    (&[], 15),
    (&[], 18),
    (&[], 20),
    (&[4, 7], 5),
    (&[9, 12], 10),
    (&[15, 18], 16),
    (&[10, 16], 13),
    (&[3, 4], 6),
    (&[8, 9], 11),
    (&[14, 15], 17),
    (&[19, 20], 22),
    (&[8, 10], 14),
    (&[8, 13], 19),
    (&[3, 5], 8),
    (&[14, 16], 19),
    (&[1, 2], 3),
    (&[6, 7], 8),
    (&[11, 12], 14),
    (&[17, 18], 19),
    (&[10, 16], 13),
    (&[4, 7], 5),
    (&[9, 12], 10),
    (&[15, 18], 16),
    (&[0], 1),
    (&[], 2),
    (&[], 4),
    (&[], 7),
    (&[], 9),
    (&[], 12),
    (&[], 15),
    (&[], 18),
    (&[], 20),
];
