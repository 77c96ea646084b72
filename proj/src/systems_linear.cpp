#include <algorithm>
#include <cmath>

#include "fracfourier/error.hpp"
#include "fracfourier/systems.hpp"

namespace fracfourier {

LinearIFS::LinearIFS(std::string name, std::vector<Piece> pieces) : name_(std::move(name)), pieces_(std::move(pieces)) {
    require(pieces_.size() >= 2, "linear IFS needs at least two pieces");
    for (const auto& p : pieces_)
        require(p.ratio > 0 && p.ratio < 1 && p.left >= 0 && p.left + p.ratio <= 1.0 + 1e-15, "IFS piece outside [0,1]");
    m_ = TransitionMatrix::full(static_cast<int>(pieces_.size()));
    init_bounds(3);
}

std::shared_ptr<LinearIFS> LinearIFS::cantor() {
    return std::make_shared<LinearIFS>("cantor", std::vector<Piece>{{0.0, 1.0 / 3.0}, {2.0 / 3.0, 1.0 / 3.0}});
}

std::shared_ptr<LinearIFS> LinearIFS::halves() {
    return std::make_shared<LinearIFS>("halves", std::vector<Piece>{{0.0, 0.5}, {0.5, 0.5}});
}

cplx LinearIFS::point(int a, double u) const {
    const Piece& p = pieces_[static_cast<std::size_t>(a)];
    return {p.left + p.ratio * u, 0.0};
}

double LinearIFS::branch(int, int b, double u) const {
    // point(b,u) seen as the chart coordinate of its preimage in any piece
    return point(b, u).real();
}

ChartPoint LinearIFS::forward(int, double u) const {
    // u itself is the image point in [0,1]; locate its piece
    for (std::size_t b = 0; b < pieces_.size(); ++b) {
        const Piece& p = pieces_[b];
        if (u >= p.left - 1e-12 && u <= p.left + p.ratio + 1e-12)
            return {static_cast<int>(b), std::clamp((u - p.left) / p.ratio, 0.0, 1.0)};
    }
    fail(ErrorKind::OrbitEscape, "iterate left the IFS pieces");
}

double LinearIFS::log_expansion(int a, double) const { return -std::log(pieces_[static_cast<std::size_t>(a)].ratio); }

}  // namespace fracfourier
