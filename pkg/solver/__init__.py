"""
Global numbering, assembly and nonlinear solution of the step problems.

Modules are imported directly (``from solver.newton import ...``); the
package itself stays empty so that diagnostics can depend on the
assembly layer without import cycles.
"""
