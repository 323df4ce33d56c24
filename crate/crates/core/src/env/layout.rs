use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NUM_OBJECTS: usize = 12;
pub const NUM_CLASSES: usize = 3;
pub const OBJECTS_PER_CLASS: usize = 4;

/// Grid coordinate, row 0 at the top.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSlot {
    pub cell: Cell,
    pub class: usize,
}

/// Geometry parameters for [`build_layout`].
///
/// One wall row and one wall column split the bordered grid into four rooms.
/// Each of the four internal wall segments carries exactly one doorway.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub width: usize,
    pub height: usize,
    pub wall_row: usize,
    pub wall_col: usize,
    /// `[row, col]` pairs.
    pub doorways: Vec<[usize; 2]>,
    pub start: [usize; 2],
    pub goal: [usize; 2],
    /// `[row, col, class]` triples.
    pub objects: Vec<[usize; 3]>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            width: 13,
            height: 13,
            wall_row: 6,
            wall_col: 6,
            doorways: vec![[6, 3], [6, 9], [3, 6], [9, 6]],
            start: [11, 1],
            goal: [1, 11],
            objects: vec![
                // top-left room
                [2, 2, 2],
                [2, 4, 1],
                [4, 4, 0],
                // top-right room
                [2, 8, 1],
                [4, 8, 2],
                [4, 10, 0],
                // bottom-left room
                [8, 2, 0],
                [8, 4, 2],
                [10, 4, 1],
                // bottom-right room
                [8, 8, 1],
                [8, 10, 0],
                [10, 10, 2],
            ],
        }
    }
}

/// A validated four-room grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridLayout {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    start: Cell,
    goal: Cell,
    objects: Vec<ObjectSlot>,
    object_at: Vec<Option<usize>>,
}

pub fn build_layout(config: &LayoutConfig) -> Result<GridLayout> {
    let invalid = |msg: String| Err(Error::InvalidLayout(msg));
    let (w, h) = (config.width, config.height);
    if w < 5 || h < 5 {
        return invalid(format!("grid {w}x{h} is too small for four rooms"));
    }
    if config.wall_row < 2 || config.wall_row + 3 > h {
        return invalid(format!("wall row {} leaves an empty room", config.wall_row));
    }
    if config.wall_col < 2 || config.wall_col + 3 > w {
        return invalid(format!("wall column {} leaves an empty room", config.wall_col));
    }

    let mut walls = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let boundary = r == 0 || c == 0 || r == h - 1 || c == w - 1;
            walls[r * w + c] = boundary || r == config.wall_row || c == config.wall_col;
        }
    }

    // Segments: 0 = wall row left of the column, 1 = right, 2 = wall column above the row, 3 = below.
    let mut per_segment = [0usize; 4];
    for &[r, c] in &config.doorways {
        let segment = if r == config.wall_row && c != config.wall_col && c > 0 && c < w - 1 {
            if c < config.wall_col {
                0
            } else {
                1
            }
        } else if c == config.wall_col && r != config.wall_row && r > 0 && r < h - 1 {
            if r < config.wall_row {
                2
            } else {
                3
            }
        } else {
            return invalid(format!("doorway ({r}, {c}) is not on an internal wall segment"));
        };
        per_segment[segment] += 1;
        walls[r * w + c] = false;
    }
    if per_segment != [1; 4] {
        return invalid(format!(
            "each internal wall segment needs exactly one doorway, got {per_segment:?}"
        ));
    }

    let in_bounds = |[r, c]: [usize; 2]| r < h && c < w;
    let open = |walls: &[bool], [r, c]: [usize; 2]| in_bounds([r, c]) && !walls[r * w + c];

    if !open(&walls, config.start) {
        return invalid(format!("start {:?} is outside the grid or in a wall", config.start));
    }
    if !open(&walls, config.goal) {
        return invalid(format!("goal {:?} is outside the grid or in a wall", config.goal));
    }
    if config.start == config.goal {
        return invalid("start and goal coincide".into());
    }

    if config.objects.len() != NUM_OBJECTS {
        return invalid(format!(
            "expected {NUM_OBJECTS} objects, got {}",
            config.objects.len()
        ));
    }
    let mut per_class = [0usize; NUM_CLASSES];
    let mut object_at = vec![None; w * h];
    let mut objects = Vec::with_capacity(NUM_OBJECTS);
    for (slot, &[r, c, class]) in config.objects.iter().enumerate() {
        if class >= NUM_CLASSES {
            return invalid(format!("object class {class} out of range"));
        }
        if !open(&walls, [r, c]) {
            return invalid(format!("object ({r}, {c}) is outside the grid or in a wall"));
        }
        if [r, c] == config.start || [r, c] == config.goal {
            return invalid(format!("object ({r}, {c}) overlaps start or goal"));
        }
        if object_at[r * w + c].is_some() {
            return invalid(format!("two objects share cell ({r}, {c})"));
        }
        object_at[r * w + c] = Some(slot);
        per_class[class] += 1;
        objects.push(ObjectSlot {
            cell: Cell::new(r, c),
            class,
        });
    }
    if per_class != [OBJECTS_PER_CLASS; NUM_CLASSES] {
        return invalid(format!(
            "expected {OBJECTS_PER_CLASS} objects per class, got {per_class:?}"
        ));
    }

    let layout = GridLayout {
        width: w,
        height: h,
        walls,
        start: Cell::new(config.start[0], config.start[1]),
        goal: Cell::new(config.goal[0], config.goal[1]),
        objects,
        object_at,
    };
    let reached = layout.flood_fill(layout.start);
    let open_cells = layout.walls.iter().filter(|&&b| !b).count();
    if reached != open_cells {
        return invalid(format!(
            "only {reached} of {open_cells} open cells are reachable from start"
        ));
    }
    Ok(layout)
}

impl GridLayout {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn objects(&self) -> &[ObjectSlot] {
        &self.objects
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        cell.row >= self.height || cell.col >= self.width || self.walls[self.index(cell)]
    }

    /// Slot index of the object placed at `cell`, if any.
    pub fn object_at(&self, cell: Cell) -> Option<usize> {
        self.object_at[self.index(cell)]
    }

    /// Open neighbours in up, down, left, right order.
    pub fn neighbours(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let Cell { row, col } = cell;
        [
            row.checked_sub(1).map(|r| Cell::new(r, col)),
            Some(Cell::new(row + 1, col)),
            col.checked_sub(1).map(|c| Cell::new(row, c)),
            Some(Cell::new(row, col + 1)),
        ]
        .into_iter()
        .flatten()
        .filter(move |&c| !self.is_wall(c))
    }

    fn flood_fill(&self, from: Cell) -> usize {
        let mut seen = vec![false; self.num_cells()];
        let mut queue = VecDeque::from([from]);
        seen[self.index(from)] = true;
        let mut count = 1;
        while let Some(cell) = queue.pop_front() {
            for next in self.neighbours(cell) {
                let i = self.index(next);
                if !seen[i] {
                    seen[i] = true;
                    count += 1;
                    queue.push_back(next);
                }
            }
        }
        count
    }

    /// ASCII rendering: `#` wall, `S` start, `G` goal, `o`/`x`/`^` object classes 0/1/2.
    pub fn ascii_map(&self) -> String {
        let mut out = String::new();
        for r in 0..self.height {
            for c in 0..self.width {
                let cell = Cell::new(r, c);
                let ch = if self.is_wall(cell) {
                    '#'
                } else if cell == self.start {
                    'S'
                } else if cell == self.goal {
                    'G'
                } else if let Some(slot) = self.object_at(cell) {
                    ['o', 'x', '^'][self.objects[slot].class]
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "legend: # wall, S start, G goal, o class 0, x class 1, ^ class 2");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_is_valid() {
        let layout = build_layout(&LayoutConfig::default()).unwrap();
        assert_eq!((layout.width(), layout.height()), (13, 13));
        assert_eq!(layout.objects().len(), 12);
        assert_eq!(layout.start(), Cell::new(11, 1));
        assert_eq!(layout.goal(), Cell::new(1, 11));
        // start in bottom-left room, goal in top-right room
        assert!(layout.start().row > 6 && layout.start().col < 6);
        assert!(layout.goal().row < 6 && layout.goal().col > 6);
    }

    #[test]
    fn default_layout_open_cells_all_reachable() {
        // independent BFS over the rendered map
        let layout = build_layout(&LayoutConfig::default()).unwrap();
        let map: Vec<Vec<char>> = layout
            .ascii_map()
            .lines()
            .take(13)
            .map(|l| l.chars().collect())
            .collect();
        let mut seen = vec![vec![false; 13]; 13];
        let mut stack = vec![(11usize, 1usize)];
        seen[11][1] = true;
        while let Some((r, c)) = stack.pop() {
            for (dr, dc) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = ((r as i32 + dr) as usize, (c as i32 + dc) as usize);
                if map[nr][nc] != '#' && !seen[nr][nc] {
                    seen[nr][nc] = true;
                    stack.push((nr, nc));
                }
            }
        }
        let open = map.iter().flatten().filter(|&&ch| ch != '#').count();
        let reached = seen.iter().flatten().filter(|&&b| b).count();
        assert_eq!(open, reached);
        assert_eq!(open, 11 * 11 - 21 + 4);
    }

    #[test]
    fn goal_in_wall_rejected() {
        let config = LayoutConfig {
            goal: [6, 7],
            ..LayoutConfig::default()
        };
        assert!(matches!(build_layout(&config), Err(Error::InvalidLayout(_))));
    }

    #[test]
    fn missing_doorway_rejected() {
        let mut config = LayoutConfig::default();
        config.doorways.pop();
        assert!(build_layout(&config).is_err());
    }

    #[test]
    fn wrong_class_counts_rejected() {
        let mut config = LayoutConfig::default();
        config.objects[0][2] = 0;
        assert!(build_layout(&config).is_err());
    }

    #[test]
    fn object_on_start_rejected() {
        let mut config = LayoutConfig::default();
        config.objects[0] = [11, 1, 2];
        assert!(build_layout(&config).is_err());
    }

    #[test]
    fn identical_configs_identical_layouts() {
        let a = build_layout(&LayoutConfig::default()).unwrap();
        let b = build_layout(&LayoutConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ascii_map(), b.ascii_map());
    }
}
