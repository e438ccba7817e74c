# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

import json

from frappe.model.document import Document


class SweepResultLog(Document):
	# begin: auto-generated types
	# This code is auto-generated. Do not modify anything in this block.

	from typing import TYPE_CHECKING

	if TYPE_CHECKING:
		from frappe.types import DF

		background_a: DF.Float
		budget_max_residual: DF.Float
		config_hash: DF.Data | None
		grading_ratio: DF.Float
		gronwall_c: DF.Float
		n1: DF.Int
		n2: DF.Int
		nu: DF.Float
		reason: DF.SmallText | None
		row_json: DF.Code | None
		status: DF.Literal["Accepted", "Rejected"]
		sup_error: DF.Float
	# end: auto-generated types

	def get_row(self):
		"""The full sweep row as written to the sweep JSON."""
		return json.loads(self.row_json) if self.row_json else {}
