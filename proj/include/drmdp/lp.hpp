// Linear and mixed-integer programming: a bounded-variable revised primal
// simplex and a best-first branch-and-bound on top of it.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace drmdp::opt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Maximize, Minimize };
enum class Relation { LessEqual, GreaterEqual, Equal };
enum class VarType { Continuous, Integer, Binary };
enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status s);

struct Term {
    int var = 0;
    double coeff = 0.0;
};

struct Constraint {
    std::vector<Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

struct LinearProgram {
    Sense sense = Sense::Maximize;
    double objective_offset = 0.0;
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> names;
    std::vector<Constraint> rows;

    int add_variable(double lo, double hi, double cost, std::string name = {});
    int add_row(std::vector<Term> terms, Relation rel, double rhs);

    int num_vars() const { return static_cast<int>(objective.size()); }
    int num_rows() const { return static_cast<int>(rows.size()); }

    /// Throws std::invalid_argument on inconsistent dimensions, NaNs, or
    /// lower > upper.
    void validate() const;

    /// Objective value of an assignment, including the offset.
    double evaluate(const std::vector<double>& x) const;

    /// Largest bound or row violation of an assignment.
    double max_violation(const std::vector<double>& x) const;
};

struct MixedIntegerProgram {
    LinearProgram lp;
    std::vector<VarType> types;

    int add_variable(double lo, double hi, double cost, VarType type, std::string name = {});
    void validate() const;
};

struct Solution {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    /// Row multipliers in the textbook sign convention of the stated sense
    /// (>= 0 for binding <= rows of a maximization). LP solves only.
    std::vector<double> row_duals;
    std::int64_t iterations = 0;
    std::int64_t nodes = 0;
};

struct SimplexOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    int refactor_interval = 100;
};

Solution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

struct BranchAndBoundOptions {
    SimplexOptions simplex;
    double absolute_gap = 1e-6;
    double integrality_tol = 1e-6;
    std::int64_t node_limit = 1'000'000;
};

Solution solve_mip(const MixedIntegerProgram& mip, const BranchAndBoundOptions& options = {});

/// Textbook dual of an LP. Finite variable bounds become explicit rows of the
/// primal before dualizing, so every primal variable maps to one free-signed
/// equality row of the dual.
LinearProgram build_dual(const LinearProgram& lp);

struct DualityReport {
    Status primal_status = Status::Infeasible;
    Status dual_status = Status::Infeasible;
    double primal_value = 0.0;
    double dual_value = 0.0;
    bool checked = false;  ///< false when the primal is not optimal
    bool ok = false;
};

DualityReport lp_duality_check(const LinearProgram& lp, double tol = 1e-6);

/// Plain-text listing in CPLEX LP file syntax.
void write_lp(std::ostream& os, const LinearProgram& lp, const std::vector<VarType>& types = {});

}  // namespace drmdp::opt
