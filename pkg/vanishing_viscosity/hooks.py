app_name = "vanishing_viscosity"
app_title = "Vanishing Viscosity"
app_publisher = "Vanishing Viscosity Contributors"
app_description = "Numerical verification of the vanishing viscosity limit for Navier-Stokes flow in a periodic channel with inflow and outflow walls: boundary layer corrector, Euler and Navier-Stokes solvers, energy budget diagnostics and convergence-rate sweeps."
app_email = "vanishing-viscosity@example.org"
app_license = "mit"

# Apps
# ------------------

required_apps = ["frappe"]

# Installation
# ------------

# before_install = "vanishing_viscosity.install.before_install"
# after_install = "vanishing_viscosity.install.after_install"

# Scheduled Tasks
# ---------------
# Sweeps are queued on demand from Viscosity Study Settings, see
# vanishing_viscosity.vanishing_viscosity.api.enqueue_sweep

# scheduler_events = {}

# Testing
# -------

# before_tests = "vanishing_viscosity.install.before_tests"

# Document Events
# ---------------

# doc_events = {}

# Request Events
# ----------------
# before_request = ["vanishing_viscosity.utils.before_request"]
# after_request = ["vanishing_viscosity.utils.after_request"]

# Job Events
# ----------
# before_job = ["vanishing_viscosity.utils.before_job"]
# after_job = ["vanishing_viscosity.utils.after_job"]

# User Data Protection
# --------------------

# user_data_fields = []
