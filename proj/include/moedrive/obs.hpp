#pragma once

#include <stdexcept>

#include "moedrive/tensor.hpp"

namespace moedrive {

/// High-level navigation command ids (one-hot of 6 at the encoder input).
enum class Command : int {
    Follow = 0,
    Left = 1,
    Right = 2,
    Straight = 3,
    ChangeLeft = 4,
    ChangeRight = 5,
};

/// What the policy sees: a forward-facing egocentric occupancy raster plus
/// ego measurements. The raster covers x in [0, 48) m ahead and
/// y in [-12, +12) m laterally, 1.5 m x 0.75 m cells, three channels
/// (drivable, agents, signs/markings), stored channel-major then
/// row-major. Rear agents are never rasterized.
struct Observation {
    static constexpr int kChannels = 3;
    static constexpr int kRows = 32; // lateral, row 0 = leftmost (+y)
    static constexpr int kCols = 32; // longitudinal, col 0 = nearest
    static constexpr int kGridSize = kChannels * kRows * kCols;
    static constexpr double kCellX = 1.5;
    static constexpr double kCellY = 0.75;

    Tensor1 grid;     // kGridSize entries in [0, 1]
    double speed = 0; // m/s
    int command = 0;  // Command id
    double goal_x = 0, goal_y = 0; // goal point, ego frame (m)

    static int index(int c, int row, int col) { return (c * kRows + row) * kCols + col; }

    void validate() const {
        if (grid.size() != std::size_t(kGridSize))
            throw std::invalid_argument("Observation: malformed grid");
        for (double v : grid)
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("Observation: grid entry outside [0,1]");
        if (command < 0 || command > 5)
            throw std::invalid_argument("Observation: bad command id");
    }
};

} // namespace moedrive
