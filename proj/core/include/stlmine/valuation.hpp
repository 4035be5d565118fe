#pragma once

#include <cstddef>
#include <vector>

#include "stlmine/errors.hpp"

namespace stlmine {

// A point in a template's parameter space, or one of the two adjoined
// sentinels. TOP marks "no satisfying valuation exists for this trace",
// BOT marks "every valuation satisfies". Point values are stored in the
// template's declaration (= priority) order.
class Valuation {
public:
    enum class Kind { Bot, Point, Top };

    Valuation() = default;

    static Valuation top() {
        Valuation v;
        v.kind_ = Kind::Top;
        return v;
    }

    static Valuation bot() {
        Valuation v;
        v.kind_ = Kind::Bot;
        return v;
    }

    static Valuation point(std::vector<double> values) {
        Valuation v;
        v.kind_ = Kind::Point;
        v.values_ = std::move(values);
        return v;
    }

    Kind kind() const { return kind_; }
    bool is_top() const { return kind_ == Kind::Top; }
    bool is_bot() const { return kind_ == Kind::Bot; }
    bool is_sentinel() const { return kind_ != Kind::Point; }

    const std::vector<double>& values() const {
        require_point();
        return values_;
    }

    std::vector<double>& values() {
        require_point();
        return values_;
    }

    double operator[](std::size_t i) const { return values()[i]; }
    std::size_t size() const { return values().size(); }

    bool operator==(const Valuation&) const = default;

private:
    void require_point() const {
        if (kind_ != Kind::Point) throw ContractError("sentinel valuation has no coordinates");
    }

    Kind kind_ = Kind::Point;
    std::vector<double> values_;
};

}  // namespace stlmine
