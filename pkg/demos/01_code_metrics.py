"""
Coupling, cohesion and their product for one code snapshot
===========================================================

A snapshot of a code base is described by a small fact file: classes,
their fields and methods, which fields each method touches and which
other classes each method refers to.
"""

from evofda.metrics import class_coupling, class_lack_of_cohesion, count_loc, parse_code_model, project_complexity

facts = """
loc 1830
class shop.Cart
field shop.Cart.items
field shop.Cart.owner shop.Customer
method shop.Cart.add
method shop.Cart.total
method shop.Cart.rename
access shop.Cart.add items
access shop.Cart.total items
ref shop.Cart.total shop.Price
ref shop.Cart.add shop.Item

class shop.Price
field shop.Price.amount
field shop.Price.currency
method shop.Price.convert
access shop.Price.convert amount
access shop.Price.convert currency
ref shop.Price.convert shop.Rates
"""
model = parse_code_model(facts)

# coupling counts distinct other classes a class refers to
for name in model.classes:
    print(f"{name:<12} cpl={class_coupling(model, name):.0f}  lcoh={class_lack_of_cohesion(model, name):.1f}")

# 'instance' mode counts every referencing method separately
print("Cart, instance mode:", class_coupling(model, "shop.Cart", mode="instance"))

# project level: means over classes, and their product
snap = project_complexity(model)
print(f"project: cpl={snap.cpl:.2f} lcoh={snap.lcoh:.2f} CplXLCoh={snap.cplxlcoh:.2f} loc={snap.loc}")

# the loc line can be produced from C-family source with count_loc
source = """
/* a cart */
int total(int *xs, int n) {
    int s = 0;   // running sum
    for (int i = 0; i < n; i++) s += xs[i];

    return s;
}
"""
print("non-blank, non-comment lines:", count_loc(source))
