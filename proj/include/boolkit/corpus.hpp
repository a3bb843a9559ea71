#ifndef BOOLKIT_CORPUS_HPP
#define BOOLKIT_CORPUS_HPP

// Fixed text shipped with the repository for the character-level language
// modelling task. The training harness is self-contained on purpose: no
// downloads, no external files, identical bytes on every machine.

namespace boolkit {

inline const char* kCorpus = R"TEXT(The river begins as a thin silver thread high in the northern hills.
It gathers rain from the slopes and snow from the ridges, and it carries them
down through the pines toward the valley floor. In the early morning the water
is cold and clear, and the stones on the bottom look close enough to touch.
The miller's daughter walks the bank before sunrise, counting herons as her
grandmother taught her, one for the mill, one for the bridge, one for the road.

In spring the river rises. The melt comes down from the high country and the
current turns brown with carried earth. The miller opens the gates and lets
the flood spin the great wheel, and the whole village hears the groan of oak
and iron as the stones begin to turn. Flour dust drifts from the mill windows
like warm snow. The farmers bring their first sacks of winter wheat and stand
in the yard trading news of lambs and late frosts while they wait their turn.

Summer slows the water. The river thins to a green ribbon between white banks
of gravel, and the children wade out to the middle with their trousers rolled
to the knee. Trout hold steady in the shade beneath the bridge, noses to the
current, patient as stones. The miller's daughter learns the names of the
water plants from the schoolmaster, who sketches each one in a grey notebook
with a pencil worn to the length of a thumb. Reeds by the slack water, cress
in the spring pools, moss on the north side of the pilings.

When autumn comes the valley turns to copper and rust. The orchard carts roll
down to the market square piled with apples, and the air in the lanes smells
of cider and wood smoke. The river runs quick and dark under the first rains,
and the wheel turns from first light until the lamps are lit. The miller
marks each sack with the sign of the wheel, a circle with six spokes, and the
carters haul them over the stone bridge to the towns beyond the ridge.

Winter shuts the valley in. Ice grows from the banks toward the middle of the
river, thin glass panes that creak and whisper in the night. The wheel is
locked and greased, the gates are closed, and the mill stands quiet under its
white roof. The miller's daughter reads by the hearth, the grey notebook open
on her knees, copying the names of the water plants until she knows them the
way she knows her own hands. Outside the snow falls without hurry, covering
the road, the bridge, and the long silver thread of the river.

The schoolmaster says the valley is a clock. The river is its spring, the
seasons are its gears, and the wheel is the hand that shows the hour. The
miller laughs at this and says a clock never fed a village, but he oils the
wheel all the same, and he watches the sky in March the way the schoolmaster
watches the almanac. Both of them are right, the daughter thinks. The valley
keeps time and the valley keeps the village, and neither task waits long.

In the second spring the flood came early and strong. The river climbed the
white gravel banks in a single night and pressed against the arches of the
stone bridge. The miller roped the gates open to spare the wheel, and the
village watched from the high road as the brown water carried fence posts and
last year's leaves through the valley. By the third day it had fallen back,
and the banks were combed smooth and new, as if the whole country had been
made again that week. The herons returned on the fourth morning, one for the
mill, one for the bridge, one for the road.

That summer the schoolmaster brought a visitor from the coast, a quiet man
who measured the river with a brass instrument on three legs. He wrote
numbers in a ledger and would not guess at anything. The flow by the mill,
the depth at the bridge, the fall from the gates to the tail race, each had
its figure, and the figures agreed with one another the way the stones of the
bridge agree, each carrying its share. The miller's daughter liked him for
that. A guess is a seed, he told her, but a measurement is a harvest.

The years in the valley are not the same year repeated. Some winters the ice
reaches the middle of the river and the boys walk across it on a dare. Some
summers the gravel banks stay underwater from June to August. One autumn the
orchard carts stopped coming because blight took the apples, and the market
square smelled only of rain. But the wheel turned in every year of them, and
the sacks went over the bridge marked with the circle and six spokes, and the
daughter's notebook grew thick with names and figures and small grey sketches.

When the miller grew old the daughter kept the mill. She opened the gates in
spring and locked the wheel in winter, and she taught the carters' children
to count herons on the morning bank. The river begins as a thin silver thread
high in the northern hills, she would tell them, and it ends in the sea that
none of us has seen, but between the hills and the sea it turns our wheel,
and that is the part of the story that feeds the village. Count the birds,
watch the sky, measure what you can, and guess the rest with care.

The bridge has stood for two hundred years. The masons who set its stones
left no names, only the shallow marks of their chisels under the parapet,
a fish, a star, a wheel, a leaf. The schoolmaster rubbed charcoal over paper
pressed to the stone and hung the gray images in the schoolroom, and the
children learned that work outlives the worker the way the river outlives
the rain. In fog the bridge seems to float on nothing, and the carters trust
the sound of their own wheels on the stone to tell them they are halfway.

Every tale in the valley returns to the water in the end. The mill and the
bridge, the orchard and the market, the notebook and the brass instrument,
all of them stand along the one moving thread. The water is never the same
and the river is never different, the schoolmaster says, and the miller's
daughter writes it down, because both halves are true, and because the wheel
is turning as she writes, slow and sure, grinding the winter wheat to flour.

The carters keep their own calendar. They reckon the year not by months but
by loads, the seed load in the thaw, the flour loads of high summer, the
apple loads of autumn, the timber loads before the snow. Each cart carries a
wooden tally on a cord, and the miller cuts a notch for every sack that goes
over the bridge. At winter's end the tallies hang in a row by the mill door,
and the village reads its year in the notches the way the schoolmaster reads
his almanac, season by season, load by load, without a single written word.

There is a pool below the tail race where the water turns slowly back on
itself, and the children call it the clock pool because a leaf dropped at
its edge will come round again while you count to a hundred. The miller's
daughter tested this with the brass-instrument man one afternoon. They
dropped a hundred leaves and counted a hundred circuits, and the counts
gathered around ninety and a hundred and ten the way sparrows gather on a
wire. A leaf is not a measurement, the man said, but a hundred leaves begin
to be one, and she wrote that in the grey notebook under the water plants.

In the dry year the river fell until the stones of the old ford showed for
the first time in living memory. The wheel turned only in the mornings, and
the miller ground by halves so that every farm would have some flour and no
farm would have plenty. The schoolmaster walked the ford with his boots dry
and found a carter's coin wedged between the stones, worn smooth, older than
the bridge. The river keeps what it takes, he told the children, and gives
it back when it pleases, and the daughter wrote that down as well, beside a
sketch of the coin and the date and the depth at the bridge, which was the
lowest figure in all the years of the ledger.

When the rains returned the valley drank for a week. The gravel banks went
under, the clock pool spun its leaves twice as fast, and the wheel ran full
days again. The miller cut new notches, the carters greased their axles,
and the village settled back into its turning year. Nothing in the valley
is ever finished, the schoolmaster says. The river begins in the hills and
the story begins at the mill, and both of them end in the sea that none of
us has seen, and both of them begin again the next morning all the same.

The daughter's notebook has a last page that is never written. She keeps it
clean for the year the river tells her something new, and every year the
river obliges, a coin, a flood, a leaf count, a low-water figure, a heron
that stays the winter. The page is written and a new notebook is begun, and
the old one goes on the shelf above the hearth with all the others, spines
in a row, a ledger of water in a house of flour by a bridge of stone.
)TEXT";

}  // namespace boolkit

#endif
