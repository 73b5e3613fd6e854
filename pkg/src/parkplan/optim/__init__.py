from .bnb import solve_milp
from .model import LinearProgram, LPBuilder, MilpProblem, Solution, Status, dump_lp
from .simplex import solve_lp

__all__ = ["LinearProgram", "LPBuilder", "MilpProblem", "Solution", "Status",
           "dump_lp", "solve_lp", "solve_milp"]
